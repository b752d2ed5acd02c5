"""Budget configuration shared by enumeration-driven operations.

All expectations in the toolkit are exact averages over explicitly
enumerated sets, so every operation that scales with ``p^dim`` carries a
cap and fails loudly instead of thrashing.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Budget:
    # hard cap on ``p^dim`` for subspace / point enumeration
    enum_cap: int = 1 << 24
    # cap on the elementwise work of a Gowers-norm computation,
    # roughly p^((d-2)n) * p^n * n with the character-transform base case
    gowers_cap: int = 1 << 28
    # max number of rank-1 correction terms whose indicator is removed by
    # exhaustive argmax over F_p^(2m) in the derandomization stages
    derand_terms_cap: int = 3
    # cap on the tensor-space size p^(n^k) for exhaustive partition-rank search
    prank_space_cap: int = 1 << 16
    # cap on candidate count for the degree-<=2 polynomial inverse oracle
    quad_oracle_cap: int = 1 << 14


DEFAULT_BUDGET = Budget()
