"""Non-classical polynomials P : F_p^n -> R/Z in the canonical monomial basis.

A polynomial is a constant plus a sum of monomials

    c * |x_1|^{i_1} ... |x_n|^{i_n} / p^{j+1}   (mod 1),

with 0 <= i_l <= p-1, depth j >= 0, c in {1, ..., p-1} and |.| the standard
map F_p -> {0, ..., p-1}.  This representation is unique, which lets every
operation that is awkward symbolically (derivatives, shifts, sums) run on
exact value tables and re-canonicalize by interpolation: the depth-peeling
interpolator below recovers the unique coefficients one depth layer at a
time, deepest first.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache

from . import fpspace
from .errors import DimensionMismatch, NotRepresentable
from .fpspace import Vec, all_vectors, check_prime, vec_add, vec_index
from .torus import TorusValue

MAX_DEPTH = 6  # depth cap: desk-scale degrees k <= 5 need j <= (k-1)/(p-1) <= 4


@dataclass(frozen=True)
class Monomial:
    exponents: tuple  # i_1..i_n, each in 0..p-1, not all zero
    depth: int  # j >= 0; denominator is p^(j+1)
    coeff: int  # c in 1..p-1

    def degree(self, p: int) -> int:
        return sum(self.exponents) + self.depth * (p - 1)


def monomial_sort_key(p: int):
    return lambda m: (m.degree(p), m.depth, m.exponents)


@dataclass(frozen=True)
class NcPoly:
    p: int
    n: int
    constant: TorusValue
    monomials: tuple  # canonically sorted Monomials with coeff != 0

    def __post_init__(self):
        check_prime(self.p)
        for mono in self.monomials:
            if len(mono.exponents) != self.n:
                raise DimensionMismatch("monomial exponent length != n")
            if not (0 < mono.coeff < self.p):
                raise ValueError("monomial coefficient out of range")
            if not all(0 <= i < self.p for i in mono.exponents):
                raise ValueError("monomial exponent out of range")
            if sum(mono.exponents) == 0:
                raise ValueError("constant monomials belong in the constant")
            if mono.depth > MAX_DEPTH:
                raise ValueError(f"depth {mono.depth} exceeds cap {MAX_DEPTH}")

    @classmethod
    def make(cls, p: int, n: int, constant: TorusValue, monomials) -> "NcPoly":
        monos = tuple(sorted((m for m in monomials if m.coeff % p != 0), key=monomial_sort_key(p)))
        return cls(p, n, constant, monos)

    @classmethod
    def zero(cls, p: int, n: int) -> "NcPoly":
        return cls(p, n, TorusValue.zero(p), ())

    @classmethod
    def from_classical(cls, p: int, n: int, coeffs: dict, constant: int = 0) -> "NcPoly":
        """Classical polynomial from {exponent tuple: coefficient} mod p."""
        monos = [
            Monomial(tuple(e), 0, c % p)
            for e, c in coeffs.items()
            if c % p != 0 and sum(e) > 0
        ]
        return cls.make(p, n, TorusValue.from_fp(p, constant % p), monos)

    def degree(self) -> int:
        return max((m.degree(self.p) for m in self.monomials), default=0)

    def is_classical(self) -> bool:
        return all(m.depth == 0 for m in self.monomials) and self.constant.m <= 1

    def max_depth_exponent(self) -> int:
        """Largest denominator exponent p^m among all values of the polynomial."""
        m = self.constant.m
        for mono in self.monomials:
            m = max(m, mono.depth + 1)
        return m

    def evaluate(self, x: Vec) -> TorusValue:
        if len(x) != self.n:
            raise DimensionMismatch(f"point has length {len(x)}, expected {self.n}")
        total = self.constant
        for mono in self.monomials:
            prod = mono.coeff
            for xi, e in zip(x, mono.exponents):
                prod *= int(xi) ** e
            total = total + TorusValue.make(self.p, prod, mono.depth + 1)
        return total

    def value_table(self) -> list:
        return [self.evaluate(x) for x in all_vectors(self.p, self.n)]

    def add_derivative(self, h: Vec) -> "NcPoly":
        """Delta_h P(x) = P(x+h) - P(x), re-canonicalized."""
        pts = all_vectors(self.p, self.n)
        table = [self.evaluate(vec_add(self.p, x, h)) - self.evaluate(x) for x in pts]
        return interpolate(self.p, self.n, table)

    def shift(self, h: Vec) -> "NcPoly":
        pts = all_vectors(self.p, self.n)
        table = [self.evaluate(vec_add(self.p, x, h)) for x in pts]
        return interpolate(self.p, self.n, table)

    def __add__(self, other: "NcPoly") -> "NcPoly":
        if (self.p, self.n) != (other.p, other.n):
            raise DimensionMismatch("mixed ambient spaces")
        pts = all_vectors(self.p, self.n)
        table = [self.evaluate(x) + other.evaluate(x) for x in pts]
        return interpolate(self.p, self.n, table)

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        return self + (-other)

    def __neg__(self) -> "NcPoly":
        pts = all_vectors(self.p, self.n)
        table = [-self.evaluate(x) for x in pts]
        return interpolate(self.p, self.n, table)

    def __str__(self) -> str:
        parts = [str(self.constant)] if not self.constant.is_zero() else []
        for m in self.monomials:
            vars_ = "".join(
                f"|x{i+1}|^{e}" if e > 1 else f"|x{i+1}|"
                for i, e in enumerate(m.exponents)
                if e
            )
            parts.append(f"{m.coeff}*{vars_}/{self.p}^{m.depth+1}")
        return " + ".join(parts) if parts else "0"


@lru_cache(maxsize=None)
def _eval_matrix_inverse(p: int):
    """Inverse mod p of the p x p matrix V[x, e] = x^e  (x, e in 0..p-1)."""
    V = [[(x**e) % p for e in range(p)] for x in range(p)]
    return fpspace.mat_inverse(p, V)


def _classical_coeffs(p: int, n: int, digits: list) -> dict:
    """Coefficients C[i] with  w(x) = sum_i C[i] prod x_l^{i_l}  mod p.

    ``digits`` is the value table of w over all_vectors(p, n).  Works one
    axis at a time using the inverse evaluation matrix.
    """
    inv = _eval_matrix_inverse(p)
    cur = list(digits)
    size = p**n
    for axis in range(n):
        nxt = [0] * size
        stride = p ** (n - 1 - axis)
        for base in range(size):
            digit = (base // stride) % p
            if digit != 0:
                continue
            vals = [cur[base + t * stride] for t in range(p)]
            for e in range(p):
                nxt[base + e * stride] = sum(inv[e][t] * vals[t] for t in range(p)) % p
        cur = nxt
    # cur is indexed like all_vectors: index of exponent tuple i
    return {all_vectors(p, n)[idx]: c for idx, c in enumerate(cur) if c}


def interpolate(p: int, n: int, table, degree_bound: int | None = None) -> NcPoly:
    """Unique canonical polynomial whose value table is ``table``.

    ``table`` is a sequence of TorusValue indexed in all_vectors order.
    Raises NotRepresentable (with a nonzero higher-difference witness) if a
    degree bound is given and the table needs degree > degree_bound.
    """
    pts = all_vectors(p, n)
    if len(table) != len(pts):
        raise DimensionMismatch(f"table has {len(table)} entries, expected {p}^{n}")
    M = max((tv.m for tv in table), default=0)
    scaled = [tv.scaled_num(M) for tv in table]
    mod = p**M

    monomials = []
    const = TorusValue.zero(p)
    # peel depth layers deepest first: depth j lives at scale p^(M-1-j)
    for j in range(M - 1, -1, -1):
        scale = p ** (M - 1 - j)
        digits = []
        for v in scaled:
            if v % scale != 0:
                raise NotRepresentable("table is not a p-power torus polynomial")  # pragma: no cover
            digits.append((v // scale) % p)
        coeffs = _classical_coeffs(p, n, digits)
        for expts, c in coeffs.items():
            if sum(expts) == 0:
                const = const + TorusValue.make(p, c, j + 1)
                term_scaled = (c * scale) % mod
                for idx in range(len(scaled)):
                    scaled[idx] = (scaled[idx] - term_scaled) % mod
            else:
                monomials.append(Monomial(expts, j, c))
                for idx, x in enumerate(pts):
                    prod = c
                    for xi, e in zip(x, expts):
                        prod *= int(xi) ** e
                    scaled[idx] = (scaled[idx] - (prod % mod) * scale) % mod
    if any(scaled):
        raise NotRepresentable("interpolation residue is nonzero")  # pragma: no cover

    poly = NcPoly.make(p, n, const, monomials)
    if degree_bound is not None and poly.degree() > degree_bound:
        witness = _difference_witness(poly, degree_bound)
        raise NotRepresentable(
            f"table requires degree {poly.degree()} > bound {degree_bound}", witness=witness
        )
    return poly


def _table_degree(p: int, n: int, table) -> int:
    """Degree of a value table; -1 for the zero table."""
    if all(tv.is_zero() for tv in table):
        return -1
    poly = interpolate(p, n, table)
    if not poly.monomials:
        return 0
    return poly.degree()


def _difference_witness(poly: NcPoly, k: int):
    """Shifts (h_1, ..., h_{k+1}) and a point x with a nonzero difference.

    Exists whenever degree(poly) > k: greedily pick shifts that drop the
    degree by exactly one, so after k+1 differences the table is nonzero.
    """
    p, n = poly.p, poly.n
    pts = all_vectors(p, n)
    table = [poly.evaluate(x) for x in pts]
    shifts = []
    for _ in range(k + 1):
        deg = _table_degree(p, n, table)
        target = deg - 1
        chosen = None
        for h in pts[1:]:
            diff = [
                table[vec_index(p, vec_add(p, x, h))] - table[vec_index(p, x)] for x in pts
            ]
            if _table_degree(p, n, diff) == target:
                chosen = (h, diff)
                break
        if chosen is None:  # pragma: no cover
            raise NotRepresentable("witness search failed; table is lower degree than claimed")
        shifts.append(chosen[0])
        table = chosen[1]
    x_witness = next(x for x in pts if not table[vec_index(p, x)].is_zero())
    return tuple(shifts) + (x_witness,)


def basis_tuples(p: int, k: int, n: int, depth_allowed: bool = True):
    """All (exponents, depth) with 0 < sum(i) <= k - j(p-1), canonical order."""
    out = []
    max_j = (k - 1) // (p - 1) if k >= 1 else -1
    if not depth_allowed:
        max_j = min(max_j, 0)
    for j in range(max_j + 1):
        for expts in itertools.product(range(p), repeat=n):
            s = sum(expts)
            if 0 < s <= k - j * (p - 1):
                out.append((expts, j))
    return out


def degree_exactly_tuples(p: int, k: int, n: int, classical_only: bool = False):
    """All (exponents, depth) with sum(i) = k - j(p-1) exactly (degree k)."""
    return [
        (e, j)
        for (e, j) in basis_tuples(p, k, n, depth_allowed=not classical_only)
        if sum(e) + j * (p - 1) == k
    ]


def stable_seed(seed) -> int:
    """Deterministic integer seed from arbitrary (reprable) seed data."""
    if isinstance(seed, int):
        return seed
    import hashlib

    return int.from_bytes(hashlib.sha256(repr(seed).encode()).digest()[:8], "big")


def random_poly(p: int, n: int, k: int, depth_allowed: bool, seed) -> NcPoly:
    """Uniform over canonical representations of degree <= k; deterministic per seed."""
    rng = random.Random(stable_seed(seed))
    tuples = basis_tuples(p, k, n, depth_allowed)
    monomials = []
    for expts, j in tuples:
        c = rng.randrange(p)
        if c:
            monomials.append(Monomial(expts, j, c))
    max_m = 1 + max((j for _, j in tuples), default=0) if depth_allowed else 1
    const = TorusValue.make(p, rng.randrange(p**max_m), max_m)
    return NcPoly.make(p, n, const, monomials)
