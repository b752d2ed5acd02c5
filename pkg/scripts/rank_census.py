#!/usr/bin/env python3
"""Census of all 256 trilinear forms on F_2^2: exact partition rank by
exhaustive layered search, analytic rank by exact bias, and the empirical
(arank, prank) table.

    python scripts/rank_census.py
"""
import collections
import math
from fractions import Fraction

import numpy as np

from hofa import rank as rk
from hofa.mforms import MultilinearForm


def main():
    ranks, parents = rk.prank_table(2, 2, 3)
    hist = collections.Counter(ranks.values())
    print(f"partition rank histogram over all {len(ranks)} tensors: {dict(sorted(hist.items()))}")
    pairs = collections.Counter()
    worst = Fraction(0)
    for key, r in sorted(ranks.items()):
        T = MultilinearForm(2, 2, 3, np.frombuffer(key, dtype=np.int8).reshape(2, 2, 2).copy())
        bias = rk.analytic_rank(T).bias
        assert bias >= Fraction(1, 2**r), "arank <= prank must hold"
        arank = 0.0 if bias == 1 else -math.log(bias) / math.log(2)
        pairs[(round(arank, 3), r)] += 1
        if r == 2:
            worst = max(worst, bias)
    print("empirical (arank, prank) pairs with multiplicity:")
    for (a, r), count in sorted(pairs.items()):
        print(f"  arank={a:6.3f}  prank={r}  x{count}")
    print(f"largest bias among prank-2 tensors: {worst}")


if __name__ == "__main__":
    main()
