#!/usr/bin/env python3
"""Timing survey of exact Gowers-norm computation on random phase functions.

    python scripts/u4_timing.py [max_n]
"""
import random
import sys
import time

from hofa import analysis as an


def main(max_n=8):
    rng = random.Random(0)
    for n in range(2, max_n + 1):
        f = an.random_unimodular_exact(rng, 2, n, 3)
        row = [f"n={n}"]
        for d in (2, 3, 4):
            t0 = time.time()
            val = an.gowers_norm(f, d)
            row.append(f"U^{d}={val.norm_float():.5f} ({time.time() - t0:.3f}s)")
        print("  ".join(row))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 8)
