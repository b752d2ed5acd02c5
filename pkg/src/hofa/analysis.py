"""Bounded functions on F_p^n, exact Gowers norms, correlations, and the
U^2 / U^3 inverse oracles.

Exact mode stores a function as an integer coefficient array over
Z[zeta_{p^m}] with a common denominator, so multiplicative derivatives,
character sums and Gowers-norm powers are exact ring elements; magnitude
comparisons go through ``RealSurd`` (rational or a + b*sqrt(2)) and never
through floats.  U^2 norms use a fast character transform along each
coordinate (a Walsh-Hadamard transform for p = 2), which makes exact U^4
norms on F_2^8 cheap; higher norms use the inductive averaging formula
with the transform as base case.  Float mode (complex tables) exists for
p = 5 demonstrations only.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import fpspace
from .config import DEFAULT_BUDGET, Budget
from .cyclotomic import CycloRing, ExactOrderUnsupported, RealSurd, common_ring, ring
from .errors import BudgetExceeded, DimensionMismatch, InternalCheckError, PreconditionError
from .fpspace import Subspace, Vec, all_vectors, vec_add, vec_index
from .ncpoly import NcPoly, basis_tuples
from .torus import TorusValue


@lru_cache(maxsize=None)
def _shift_table(p: int, n: int) -> np.ndarray:
    """SHIFT[i, j] = index of (x_i + x_j) in all_vectors order."""
    size = p**n
    idx = np.arange(size)
    digits = np.empty((n, size), dtype=np.int64)
    rem = idx.copy()
    for a in range(n - 1, -1, -1):
        digits[a] = rem % p
        rem //= p
    # recombine digit-wise sums; first coordinate most significant
    acc = np.zeros((size, size), dtype=np.int64)
    for a in range(n):
        s = (digits[a][:, None] + digits[a][None, :]) % p
        acc = acc * p + s
    return acc


def shift_indices(p: int, n: int, h: Vec) -> np.ndarray:
    """Array mapping index(x) -> index(x + h)."""
    return _shift_table(p, n)[vec_index(p, h)]


@dataclass(frozen=True)
class BoundedFunction:
    """A table of complex values on F_p^n with sup-norm <= 1.

    Exact mode: ``coeffs`` has shape (ring.degree, p^n) and value(x) =
    (sum_i coeffs[i, x] zeta^i) / den.  Float mode: ``values`` is a
    complex array and ``ring`` is None.
    """

    p: int
    n: int
    ring: CycloRing | None
    coeffs: np.ndarray | None = field(compare=False)
    den: int = 1
    values: np.ndarray | None = field(default=None, compare=False)
    # exponent table when the function is a pure root-of-unity phase;
    # carried so Gowers norms can run on integer exponent arithmetic
    exps: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.ring is not None:
            if self.coeffs.shape != (self.ring.degree, self.p**self.n):
                raise DimensionMismatch("coefficient array has wrong shape")

    # -- constructors --

    @classmethod
    def ones(cls, p: int, n: int) -> "BoundedFunction":
        R = ring(p, 0)
        c = np.ones((1, p**n), dtype=np.int64)
        return cls(p, n, R, c, 1, exps=np.zeros(p**n, dtype=np.int64))

    @classmethod
    def from_exponents(cls, p: int, n: int, m: int, exps) -> "BoundedFunction":
        """Unimodular function zeta_{p^m}^{exps[x]}."""
        R = ring(p, m)
        exps = np.asarray(exps, dtype=np.int64) % R.N
        if exps.shape != (p**n,):
            raise DimensionMismatch("exponent table has wrong length")
        return cls(p, n, R, R.roots_to_coeffs(exps).astype(np.int64), 1, exps=exps)

    @classmethod
    def from_poly_phase(cls, P: NcPoly, conjugate: bool = False) -> "BoundedFunction":
        """The polynomial phase e^{2 pi i P(x)} (conjugated if requested)."""
        m = max(1, P.max_depth_exponent())
        N = P.p**m
        exps = []
        for x in all_vectors(P.p, P.n):
            v = P.evaluate(x)
            t = v.num * (N // P.p**v.m)
            exps.append(-t if conjugate else t)
        return cls.from_exponents(P.p, P.n, m, np.array(exps) % N)

    @classmethod
    def from_complex_values(cls, p: int, n: int, values) -> "BoundedFunction":
        vals = np.asarray(values, dtype=np.complex128)
        if vals.shape != (p**n,):
            raise DimensionMismatch("value table has wrong length")
        if (np.abs(vals) > 1 + 1e-9).any():
            raise PreconditionError("function exceeds sup-norm 1")
        return cls(p, n, None, None, 1, vals)

    # -- basic data access --

    @property
    def exact(self) -> bool:
        return self.ring is not None

    @property
    def size(self) -> int:
        return self.p**self.n

    def value_complex(self, x: Vec) -> complex:
        i = vec_index(self.p, x)
        if self.exact:
            return self.ring.to_complex(self.coeffs[:, i]) / self.den
        return complex(self.values[i])

    def to_complex_table(self) -> np.ndarray:
        if not self.exact:
            return self.values.copy()
        N = self.ring.N
        roots = np.array(
            [complex(math.cos(2 * math.pi * i / N), math.sin(2 * math.pi * i / N)) for i in range(self.ring.degree)]
        )
        return (roots @ self.coeffs) / self.den

    def check_bounded(self) -> bool:
        """Exact sup-norm check where the ring supports it, float otherwise."""
        if not self.exact:
            return bool((np.abs(self.values) <= 1 + 1e-9).all())
        d2 = self.ring.mul_arrays(self.coeffs, self.ring.conj_arrays(self.coeffs))
        bound = RealSurd(Fraction(self.den**2))
        for col in range(d2.shape[1]):
            try:
                v = RealSurd.from_ring_element(self.ring, d2[:, col])
            except ExactOrderUnsupported:
                return bool(abs(self.ring.to_complex(d2[:, col])) <= self.den**2 + 1e-6)
            if v > bound:
                return False
        return True

    # -- exact-mode arithmetic --

    def embed(self, target: CycloRing) -> "BoundedFunction":
        if not self.exact:
            raise PreconditionError("cannot embed a float-mode function")
        if target.N == self.ring.N:
            return self
        M = self.ring.embed_matrix(target)
        step = target.N // self.ring.N
        new_exps = (self.exps * step) % target.N if self.exps is not None else None
        return BoundedFunction(self.p, self.n, target, (self.coeffs.T @ M).T, self.den, exps=new_exps)

    def conj(self) -> "BoundedFunction":
        if self.exact:
            new_exps = (-self.exps) % self.ring.N if self.exps is not None else None
            return BoundedFunction(
                self.p, self.n, self.ring, self.ring.conj_arrays(self.coeffs), self.den, exps=new_exps
            )
        return BoundedFunction(self.p, self.n, None, None, 1, np.conj(self.values))

    def shift_arg(self, h: Vec) -> "BoundedFunction":
        """x -> f(x + h)."""
        sh = shift_indices(self.p, self.n, h)
        if self.exact:
            new_exps = self.exps[sh] if self.exps is not None else None
            return BoundedFunction(self.p, self.n, self.ring, self.coeffs[:, sh], self.den, exps=new_exps)
        return BoundedFunction(self.p, self.n, None, None, 1, self.values[sh])

    def mul(self, other: "BoundedFunction") -> "BoundedFunction":
        if (self.p, self.n) != (other.p, other.n):
            raise DimensionMismatch("functions on different spaces")
        if self.exact and other.exact:
            R = common_ring(self.ring, other.ring)
            a, b = self.embed(R), other.embed(R)
            new_exps = None
            if a.exps is not None and b.exps is not None:
                new_exps = (a.exps + b.exps) % R.N
            return BoundedFunction(
                self.p, self.n, R, R.mul_arrays(a.coeffs, b.coeffs), a.den * b.den, exps=new_exps
            )
        va = self.to_complex_table() if self.exact else self.values
        vb = other.to_complex_table() if other.exact else other.values
        return BoundedFunction(self.p, self.n, None, None, 1, va * vb)

    def mult_derivative(self, h: Vec) -> "BoundedFunction":
        """d_h f(x) = f(x+h) * conj(f(x)); 1-bounded, exact when f is."""
        return self.shift_arg(h).mul(self.conj())

    def scale_phase(self, t: int, m: int) -> "BoundedFunction":
        """Multiply by the global constant zeta_{p^m}^t."""
        R = common_ring(self.ring, ring(self.p, m))
        f = self.embed(R)
        tt = (t * (R.N // self.p**m)) % R.N
        M = R.root_matrix(tt)
        new_exps = (f.exps + tt) % R.N if f.exps is not None else None
        return BoundedFunction(
            self.p, self.n, R, np.tensordot(M, f.coeffs, axes=([1], [0])), f.den, exps=new_exps
        )

    def restrict_to_coset(self, U: Subspace, shift: Vec) -> "BoundedFunction":
        """The function c -> f(shift + U.basis . c) on F_p^{dim U}."""
        cols = [
            vec_index(self.p, vec_add(self.p, shift, fpspace.embed_from_subspace(U, c)))
            for c in all_vectors(self.p, U.dim)
        ]
        if self.exact:
            new_exps = self.exps[cols] if self.exps is not None else None
            return BoundedFunction(self.p, U.dim, self.ring, self.coeffs[:, cols], self.den, exps=new_exps)
        return BoundedFunction(self.p, U.dim, None, None, 1, self.values[cols])

    def with_replaced_values(self, replacements: dict) -> "BoundedFunction":
        """Exact-mode pointwise replacement {x: exponent in current ring}."""
        if not self.exact:
            raise PreconditionError("float mode not supported here")
        c = self.coeffs.copy()
        new_exps = self.exps.copy() if self.exps is not None and self.den == 1 else None
        for x, t in replacements.items():
            c[:, vec_index(self.p, x)] = self.ring.root(t) * self.den
            if new_exps is not None:
                new_exps[vec_index(self.p, x)] = t % self.ring.N
        return BoundedFunction(self.p, self.n, self.ring, c, self.den, exps=new_exps)

    def restricted_exps(self) -> np.ndarray | None:
        return self.exps if (self.exps is not None and self.den == 1) else None


# -- exact scalar results --


@dataclass(frozen=True)
class CorrValue:
    """An exact complex average S / den with |.|^2 available exactly."""

    ring: CycloRing | None
    num: np.ndarray | None  # ring element
    den: int
    float_value: complex

    @classmethod
    def from_sum(cls, R: CycloRing, num: np.ndarray, den: int) -> "CorrValue":
        return cls(R, num, den, R.to_complex(num) / den)

    @classmethod
    def from_float(cls, z: complex) -> "CorrValue":
        return cls(None, None, 1, complex(z))

    @property
    def exact(self) -> bool:
        return self.ring is not None

    def mag2(self) -> RealSurd:
        """|value|^2 as an exact RealSurd; raises if the ring cannot order."""
        if not self.exact:
            raise ExactOrderUnsupported("float-mode correlation")
        m2 = self.ring.mag_squared(self.num)
        return RealSurd.from_ring_element(self.ring, m2, self.den**2)

    def modulus_float(self) -> float:
        return abs(self.float_value)

    def mag2_is_one(self) -> bool:
        if not self.exact:
            return abs(abs(self.float_value) - 1) < 1e-9
        m2 = self.ring.mag_squared(self.num)
        one = self.ring.zero()
        one[0] = self.den**2
        return np.array_equal(m2, one)

    def __str__(self):
        return f"|{self.float_value:.6g}|"


@dataclass(frozen=True)
class GowersNormValue:
    """Exact 2^d-th power of a U^d norm, with float norm for reporting."""

    d: int
    ring: CycloRing | None
    power_num: tuple  # ring element as a tuple of ints (real value)
    power_den: int
    float_power: float

    @classmethod
    def from_parts(cls, d: int, R: CycloRing, num, den: int) -> "GowersNormValue":
        z = R.to_complex(np.asarray(num))
        if abs(z.imag) > 1e-6 * max(1.0, abs(z.real)):  # pragma: no cover
            raise InternalCheckError("Gowers norm power has imaginary part")
        return cls(d, R, tuple(int(v) for v in num), den, z.real / den)

    @classmethod
    def from_float(cls, d: int, value: float) -> "GowersNormValue":
        return cls(d, None, (), 1, float(value))

    @property
    def exact(self) -> bool:
        return self.ring is not None

    def power_surd(self) -> RealSurd:
        if not self.exact:
            raise ExactOrderUnsupported("float-mode norm")
        return RealSurd.from_ring_element(self.ring, np.array(self.power_num), self.power_den)

    def norm_float(self) -> float:
        return max(self.float_power, 0.0) ** (1.0 / (1 << self.d))

    def is_one(self) -> bool:
        if not self.exact:
            return abs(self.float_power - 1.0) < 1e-9
        num = np.array(self.power_num)
        one = np.zeros_like(num)
        one[0] = self.power_den
        return np.array_equal(num, one)

    def __str__(self):
        return f"U^{self.d} = {self.norm_float():.6g}"


# -- exact character transform --


def char_transform(fn: BoundedFunction, sign: int = -1) -> np.ndarray:
    """tau[chi] = sum_x f_num(x) * omega_p^{sign <chi, x>}, chi in vector order."""
    return _transform_array(fn.ring, fn.p, fn.n, fn.coeffs, sign)


def _transform_array(R: CycloRing, p: int, n: int, coeffs: np.ndarray, sign: int) -> np.ndarray:
    d = coeffs.shape[0]
    rest = coeffs.shape[1:]
    size = p**n
    arr = coeffs.reshape((d,) + rest[:-1] + (p,) * n)
    first_field_axis = 1 + (len(rest) - 1)
    if p == 2:
        for axis in range(first_field_axis, arr.ndim):
            a0 = np.take(arr, 0, axis=axis)
            a1 = np.take(arr, 1, axis=axis)
            arr = np.stack([a0 + a1, a0 - a1], axis=axis)
        return arr.reshape((d,) + rest[:-1] + (size,))
    # p = 3 (or 5 would need the full root matrices; p=5 stays float mode)
    e = R.N // p
    W1 = R.root_matrix((sign * e) % R.N)
    W2 = R.root_matrix((2 * sign * e) % R.N)
    for axis in range(first_field_axis, arr.ndim):
        parts = [np.take(arr, t, axis=axis) for t in range(p)]
        if p == 3:
            y0 = parts[0] + parts[1] + parts[2]
            w_p1 = np.einsum("ij,j...->i...", W1, parts[1])
            w_p2 = np.einsum("ij,j...->i...", W2, parts[2])
            w2_p1 = np.einsum("ij,j...->i...", W2, parts[1])
            w1_p2 = np.einsum("ij,j...->i...", W1, parts[2])
            y1 = parts[0] + w_p1 + w_p2
            y2 = parts[0] + w2_p1 + w1_p2
            arr = np.stack([y0, y1, y2], axis=axis)
        else:  # pragma: no cover
            raise PreconditionError(f"exact transform unsupported for p={p}")
    return arr.reshape((d,) + rest[:-1] + (size,))


def _u2_power_batch(R: CycloRing, p: int, n: int, coeffs: np.ndarray) -> np.ndarray:
    """sum_chi |tau(chi)|^4 for a batch: coeffs shape (d, ..., p^n)."""
    tau = _transform_array(R, p, n, coeffs, sign=-1)
    m2 = R.mul_arrays(tau, R.conj_arrays(tau))
    m4 = R.mul_arrays(m2, m2)
    return m4.sum(axis=-1)


def gowers_norm(
    fn: BoundedFunction, d: int, budget: Budget = DEFAULT_BUDGET
) -> GowersNormValue:
    """Exact U^d norm (as its 2^d-th power) via the inductive formula.

    U^2 is evaluated by the character transform; U^d averages
    U^{d-1}(d_h f)^{2^{d-1}} over all shifts h.  Pure phase functions over
    p = 2 take an integer exponent-table fast path.
    """
    if d < 2:
        raise PreconditionError("Gowers norms need d >= 2")
    p, n = fn.p, fn.n
    work = p ** ((d - 2) * n) * p**n * max(n, 1)
    if work > budget.gowers_cap:
        raise BudgetExceeded(f"U^{d} work {work} exceeds budget {budget.gowers_cap}")
    if not fn.exact:
        return GowersNormValue.from_float(d, _float_gowers_power(fn, d))
    R = fn.ring
    size = p**n
    if p == 2 and fn.restricted_exps() is not None and d in (2, 3, 4):
        return _gowers_phase_p2(fn, d)
    if d == 2:
        num = _u2_power_batch(R, p, n, fn.coeffs)
        return GowersNormValue.from_parts(d, R, num, p ** (4 * n) * fn.den**4)
    if d == 3:
        sh = _shift_table(p, n)
        der = R.mul_arrays(fn.coeffs[:, sh], R.conj_arrays(fn.coeffs)[:, None, :])
        nums = _u2_power_batch(R, p, n, der)  # (d_ring, size_h)
        total = nums.astype(object).sum(axis=-1)
        return GowersNormValue.from_parts(d, R, total, p ** (5 * n) * fn.den**8)
    # d >= 4: loop over the outermost shift, batch the rest
    total = None
    den_inner = None
    for h in all_vectors(p, n):
        g = fn.mult_derivative(h)
        inner = gowers_norm(g, d - 1, budget)
        num = np.array(inner.power_num, dtype=object)
        total = num if total is None else total + num
        den_inner = inner.power_den
    return GowersNormValue.from_parts(d, R, total, den_inner * size)


def _wht_last_inplace(a: np.ndarray, nbits: int) -> np.ndarray:
    """Walsh-Hadamard transform over the last axis (length 2^nbits)."""
    size = 1 << nbits
    shape = a.shape
    a = np.ascontiguousarray(a)
    flat = a.reshape(-1, size)
    h = 1
    while h < size:
        v = flat.reshape(-1, size // (2 * h), 2, h)
        x0 = v[:, :, 0, :]
        x1 = v[:, :, 1, :]
        tmp = x0 - x1
        x0 += x1
        x1[...] = tmp
        h *= 2
    return flat.reshape(shape)


def _mag4_sums_p2(R: CycloRing, taus: list) -> tuple:
    """sum |tau|^4 over everything, as ring coefficients, for p = 2 rings.

    ``taus`` lists the transform of each ring-coefficient plane.  For
    Z[zeta_8], |z|^2 = A + B*sqrt2 with A = sum a_i^2 and
    B = a0 a1 + a1 a2 + a2 a3 - a0 a3, so |z|^4 = (A^2 + 2 B^2) + 2AB*sqrt2.
    """
    deg = R.degree
    if deg == 4:
        a0, a1, a2, a3 = taus
        A = a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3
        B = a0 * a1 + a1 * a2 + a2 * a3 - a0 * a3
        # |tau| <= p^n and the chunking keeps each partial sum within int64
        c0 = int((A * A + 2 * B * B).sum())
        c1 = int(2 * (A * B).sum())
        return (c0, c1, 0, -c1)
    if deg == 2:  # Z[i]
        A = taus[0] ** 2 + taus[1] ** 2
        return (int((A * A).sum()), 0)
    A = taus[0] ** 2
    return (int((A * A).sum()),)


def _gowers_phase_p2(fn: BoundedFunction, d: int) -> GowersNormValue:
    """Exponent-table Gowers norms for p = 2 phase functions."""
    p, n = fn.p, fn.n
    R = fn.ring
    N, size = R.N, p**n
    exps = fn.exps
    sh = _shift_table(p, n)
    luts = [np.ascontiguousarray(R._reduce[:, i]) for i in range(R.degree)]

    def u2_sum(E):  # E: (..., size) exponent tables; returns summed ring coeffs
        taus = [_wht_last_inplace(lut[E], n) for lut in luts]
        return _mag4_sums_p2(R, taus)

    if d == 2:
        num = u2_sum(exps % N)
        return GowersNormValue.from_parts(d, R, _pad_coeffs(R, num), p ** (4 * n))
    if d == 3:
        E1 = (exps[sh] - exps[None, :]) % N
        num = u2_sum(E1)
        return GowersNormValue.from_parts(d, R, _pad_coeffs(R, num), p ** (5 * n))
    # d == 4: chunk the outer shift axis
    total = None
    chunk = max(1, (1 << 21) // (size * size))
    for start in range(0, size, chunk):
        block = sh[start : start + chunk]
        E1 = (exps[block] - exps[None, :]) % N  # (B, size)
        E2 = (E1[:, sh] - E1[:, None, :]) % N  # (B, size_h, size_x)
        num = u2_sum(E2)
        total = num if total is None else tuple(a + b for a, b in zip(total, num))
    return GowersNormValue.from_parts(d, R, _pad_coeffs(R, total), p ** (6 * n))


def _pad_coeffs(R: CycloRing, num) -> np.ndarray:
    out = np.zeros(R.degree, dtype=object)
    for i, v in enumerate(num):
        out[i] = int(v)
    return out


def _float_gowers_power(fn: BoundedFunction, d: int) -> float:
    vals = fn.to_complex_table()
    p, n = fn.p, fn.n
    sh = _shift_table(p, n)

    def power(v, dd):
        if dd == 2:
            tau = np.fft.fftn((v.reshape((p,) * n)), norm=None) if False else _float_transform(p, n, v)
            return float((np.abs(tau) ** 4).sum() / p ** (4 * n))
        return float(np.mean([power(v[sh[vec_index(p, h)]] * np.conj(v), dd - 1) for h in all_vectors(p, n)]))

    return power(vals, d)


def _float_transform(p: int, n: int, vals: np.ndarray) -> np.ndarray:
    w = np.exp(-2j * np.pi / p)
    arr = vals.reshape((p,) * n)
    F = np.array([[w ** (i * j) for j in range(p)] for i in range(p)])
    for axis in range(n):
        arr = np.tensordot(F, arr, axes=([1], [axis]))
        arr = np.moveaxis(arr, 0, axis)
    return arr.reshape(-1)


def direct_gowers_power(fn: BoundedFunction, d: int, budget: Budget = DEFAULT_BUDGET):
    """Definition-chasing oracle: average the full 2^d-corner product."""
    p, n = fn.p, fn.n
    if p ** ((d + 1) * n) > budget.enum_cap:
        raise BudgetExceeded("direct Gowers sum too large")

    def rec(g: BoundedFunction, depth: int):
        if depth == 0:
            if g.exact:
                return g.coeffs.astype(object).sum(axis=1), g.den
            return g.values.sum(), 1
        acc = None
        den = None
        for h in all_vectors(p, n):
            num, dd = rec(g.mult_derivative(h), depth - 1)
            acc = num if acc is None else acc + num
            den = dd
        return acc, den * p**n

    num, den = rec(fn, d)
    if fn.exact:
        return GowersNormValue.from_parts(d, fn.ring, np.asarray(num, dtype=object), den * p**n)
    return GowersNormValue.from_float(d, (num / (den * p**n)).real)


# -- correlations and inverse oracles --


def correlation(fn: BoundedFunction, P: NcPoly) -> CorrValue:
    """|E_x f(x) e^{-2 pi i P(x)}| data, exact for exact inputs."""
    if (fn.p, fn.n) != (P.p, P.n):
        raise DimensionMismatch("function and polynomial on different spaces")
    phase = BoundedFunction.from_poly_phase(P, conjugate=True)
    prod = fn.mul(phase)
    if prod.exact:
        return CorrValue.from_sum(prod.ring, prod.coeffs.sum(axis=1), prod.den * fn.size)
    return CorrValue.from_float(prod.values.mean())


def average(fn: BoundedFunction) -> CorrValue:
    if fn.exact:
        return CorrValue.from_sum(fn.ring, fn.coeffs.sum(axis=1), fn.den * fn.size)
    return CorrValue.from_float(fn.values.mean())


def u2_inverse(fn: BoundedFunction) -> tuple[Vec, CorrValue]:
    """Exact argmax character: chi maximizing |E f(x) omega^{-<chi, x>}|.

    Also asserts the Plancherel bound corr^2 >= ||f||_{U^2}^4.
    """
    if not fn.exact:
        tau = _float_transform(fn.p, fn.n, fn.values) / fn.size
        best = int(np.argmax(np.abs(tau)))
        return all_vectors(fn.p, fn.n)[best], CorrValue.from_float(tau[best])
    R = fn.ring
    tau = char_transform(fn, sign=-1)
    m2 = R.mul_arrays(tau, R.conj_arrays(tau))
    best, best_val = 0, RealSurd.from_ring_element(R, m2[:, 0])
    for i in range(1, m2.shape[1]):
        v = RealSurd.from_ring_element(R, m2[:, i])
        if v > best_val:
            best, best_val = i, v
    corr = CorrValue.from_sum(R, tau[:, best], fn.size * fn.den)
    u2 = gowers_norm(fn, 2)
    try:
        if not (corr.mag2() >= u2.power_surd()):  # pragma: no cover
            raise InternalCheckError("Plancherel bound corr^2 >= U2^4 failed")
    except ExactOrderUnsupported:  # pragma: no cover
        pass
    return all_vectors(fn.p, fn.n)[best], corr


@lru_cache(maxsize=None)
def _quadratic_candidates(p: int, n: int, classical_only: bool):
    """Monomial tuples of degree <= 2 and their exponent tables, ring depth."""
    tuples = basis_tuples(p, 2, n, depth_allowed=not classical_only)
    m = 1 + max((j for _, j in tuples), default=0)
    N = p**m
    tables = []
    for expts, j in tuples:
        tab = []
        for x in all_vectors(p, n):
            prod = 1
            for xi, e in zip(x, expts):
                prod *= int(xi) ** e
            tab.append((prod % p ** (j + 1)) * (N // p ** (j + 1)))
        tables.append(np.array(tab, dtype=np.int64))
    return tuples, m, tables


def u3_inverse_bruteforce(
    fn: BoundedFunction,
    classical_only: bool = False,
    budget: Budget = DEFAULT_BUDGET,
) -> tuple[NcPoly, CorrValue]:
    """Exact argmax over all degree-<=2 polynomials mod constants.

    Enumeration over the canonical quadratic coefficient tuples; the
    returned correlation is exact.  This is an oracle by enumeration, not
    a proof-driven inverse theorem.
    """
    p, n = fn.p, fn.n
    tuples, m, tables = _quadratic_candidates(p, n, classical_only)
    ncand = p ** len(tuples)
    if ncand > budget.quad_oracle_cap:
        raise BudgetExceeded(f"{ncand} quadratic candidates exceed the oracle budget")
    if not fn.exact:
        return _u3_oracle_float(fn, tuples, m, tables)
    R = common_ring(fn.ring, ring(p, m))
    f = fn.embed(R)
    Nq = p**m
    step = R.N // Nq
    best = None
    for cand in itertools.product(range(p), repeat=len(tuples)):
        exps = np.zeros(fn.size, dtype=np.int64)
        for c, tab in zip(cand, tables):
            if c:
                exps += c * tab
        exps = (exps % Nq) * step
        num = R.zero()
        for t in np.unique(exps):
            colsum = f.coeffs[:, exps == t].sum(axis=1)
            num = num + np.tensordot(R.root_matrix((-t) % R.N), colsum, axes=([1], [0]))
        val = RealSurd.from_ring_element(R, R.mag_squared(num))
        if best is None or val > best[0]:
            best = (val, cand, num)
    _, cand, num = best
    Q = _poly_from_candidate(p, n, tuples, cand)
    return Q, CorrValue.from_sum(R, num, fn.size * fn.den)


def _poly_from_candidate(p, n, tuples, cand) -> NcPoly:
    from .ncpoly import Monomial

    monos = [Monomial(e, j, c) for (e, j), c in zip(tuples, cand) if c]
    return NcPoly.make(p, n, TorusValue.zero(p), monos)


def _u3_oracle_float(fn, tuples, m, tables):
    N = fn.p**m
    vals = fn.to_complex_table()
    best = None
    for cand in itertools.product(range(fn.p), repeat=len(tuples)):
        exps = np.zeros(fn.size, dtype=np.int64)
        for c, tab in zip(cand, tables):
            if c:
                exps += c * tab
        z = (vals * np.exp(-2j * np.pi * (exps % N) / N)).mean()
        if best is None or abs(z) > abs(best[0]):
            best = (z, cand)
    z, cand = best
    return _poly_from_candidate(fn.p, fn.n, tuples, cand), CorrValue.from_float(z)


def octolinear_average(gs: dict, budget: Budget = DEFAULT_BUDGET) -> CorrValue:
    """E_{x,h1,h2,h3} of the eight-corner product of the g_S.

    ``gs`` maps subset bitmasks S of {h1, h2, h3} (bit i = h_{i+1}) to
    functions; the factor at corner x + h_S is conjugated when |S| is even.
    """
    f0 = gs[0]
    p, n = f0.p, f0.n
    if p ** (4 * n) > budget.enum_cap:
        raise BudgetExceeded("octolinear sum too large")
    R = f0.ring
    for g in gs.values():
        R = common_ring(R, g.ring)
    emb = {S: (g.embed(R) if g.exact else None) for S, g in gs.items()}
    if any(v is None for v in emb.values()):
        raise PreconditionError("octolinear average requires exact functions")
    conj = {S: (bin(S).count("1") % 2 == 0) for S in range(8)}
    tabs = {
        S: (R.conj_arrays(emb[S].coeffs) if conj[S] else emb[S].coeffs) for S in range(8)
    }
    den = 1
    for S in range(8):
        den *= emb[S].den
    sh = _shift_table(p, n)
    total = R.zero().astype(object)
    size = len(all_vectors(p, n))
    for i1 in range(size):
        for i2 in range(size):
            i12 = sh[i1, i2]
            for i3 in range(size):
                corner = {
                    1: sh[:, i1],
                    2: sh[:, i2],
                    3: sh[sh[:, i1], i2],
                    4: sh[:, i3],
                    5: sh[sh[:, i1], i3],
                    6: sh[sh[:, i2], i3],
                    7: sh[sh[:, i12], i3],
                }
                prod = tabs[0]
                for S in range(1, 8):
                    prod = R.mul_arrays(prod, tabs[S][:, corner[S]])
                total = total + prod.sum(axis=-1)
    return CorrValue.from_sum(R, np.array([int(v) for v in total]), den * p ** (4 * n))


def gcs_check(gs: dict, avg: CorrValue, budget: Budget = DEFAULT_BUDGET):
    """|average| <= prod_S ||g_S||_{U^3}: returns (holds, norms)."""
    norms = {S: gowers_norm(g, 3, budget) for S, g in gs.items()}
    lhs = avg.mag2() ** 8
    rhs = RealSurd(Fraction(1))
    for S in range(8):
        rhs = rhs * norms[S].power_surd() ** 2
    return bool(lhs <= rhs), norms


# -- random generators for tests --


def random_mu_p_function(rng, p: int, n: int, zeros: bool = False) -> BoundedFunction:
    exps = [rng.randrange(p) for _ in range(p**n)]
    f = BoundedFunction.from_exponents(p, n, 1, exps)
    if zeros:
        c = f.coeffs.copy()
        for i in range(p**n):
            if rng.random() < 0.2:
                c[:, i] = 0
        f = BoundedFunction(p, n, f.ring, c, 1)
    return f


def random_unimodular_exact(rng, p: int, n: int, m: int) -> BoundedFunction:
    N = p**m
    return BoundedFunction.from_exponents(p, n, m, [rng.randrange(N) for _ in range(p**n)])
