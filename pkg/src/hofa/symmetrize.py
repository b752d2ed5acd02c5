"""Symmetrization of trilinear forms that correlate through the
seven-function pattern

    E_{x,y,z} b1(x) b2(y) b3(z) b4(x+y) b5(x+z) b6(y+z) b7(x+y+z) w^{T(x,y,z)},

covering: the Cauchy-Schwarz defect bound for bilinear kernels, the
permutation-defect bounds for trilinear forms, extraction of a subspace
where the form is symmetric, the codimension-1 classical reduction for
p = 3, the nullspace reduction to nCSM for p = 2, the Cauchy-Schwarz
removal of lower-order multiaffine parts, and the two end-to-end
symmetrization pipelines.  Every claimed inequality is recomputed exactly
(bias form, squared magnitudes) and recorded in a ledger.

delta is always the measured correlation of the stored witness data,
never a user-supplied number, so each ledger line is falsifiable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fpspace, mforms, rank
from .analysis import BoundedFunction, CorrValue, _shift_table
from .config import DEFAULT_BUDGET, Budget
from .cyclotomic import RealSurd, common_ring, ring
from .errors import DimensionMismatch, InternalCheckError, PreconditionError
from .fpspace import Subspace, all_vectors, vec_add, vec_index
from .mforms import (
    BilinearForm,
    MultiaffineForm,
    MultilinearForm,
    S3,
    TRANSPOSITIONS_3,
    is_csm,
    is_ncsm,
    is_symmetric,
    multilinear_part,
    permute,
    restrict,
)
from .rank import RankCertificate, analytic_rank, bilinear_rank, vanishing_decomposition


# -- exact seven-function correlations --


def _coordinate_matrix(p: int, n: int) -> np.ndarray:
    return np.array(all_vectors(p, n), dtype=np.int64).reshape(p**n, n)


def form_cube(form, p: int, n: int) -> np.ndarray:
    """Value table F[x, y, z] in F_p of a trilinear or triaffine form."""
    X = _coordinate_matrix(p, n)
    if isinstance(form, MultiaffineForm):
        size = p**n
        cube = np.zeros((size, size, size), dtype=np.int64)
        for slots, comp in form.components:
            slots = sorted(slots)
            if not slots:
                cube += int(comp.coeffs)
                continue
            t = comp.coeffs.astype(np.int64)
            for _ in slots:
                t = np.tensordot(t, X, axes=([0], [1])) % p
            # t is indexed by the slots in sorted order; broadcast into the cube
            shape = [1, 1, 1]
            for s in slots:
                shape[s] = size
            cube += t.reshape(tuple(shape))
        return cube % p
    t = form.coeffs.astype(np.int64)
    for _ in range(3):
        t = np.tensordot(t, X, axes=([0], [1])) % p
    return t


def pair_square(form: MultilinearForm) -> np.ndarray:
    """Value table F[u, v] of a bilinear form."""
    X = _coordinate_matrix(form.p, form.n)
    t = form.coeffs.astype(np.int64)
    for _ in range(2):
        t = np.tensordot(t, X, axes=([0], [1])) % form.p
    return t


def seven_correlation(bs, form, budget: Budget = DEFAULT_BUDGET) -> CorrValue:
    """Exact E_{x,y,z} b1(x)b2(y)b3(z)b4(x+y)b5(x+z)b6(y+z)b7(x+y+z) w^{form}."""
    b1, b2, b3, b4, b5, b6, b7 = bs
    p, n = b1.p, b1.n
    size = p**n
    if size**3 * 8 > budget.enum_cap:
        raise fpspace.BudgetExceeded("seven-function correlation too large")  # pragma: no cover
    R = ring(p, 1)
    for b in bs:
        if not b.exact:
            raise PreconditionError("exact witness functions required")
        R = common_ring(R, b.ring)
    emb = [b.embed(R) for b in bs]
    cube = form_cube(form, p, n) * (R.N // p)
    phase = R.roots_to_coeffs(cube)  # (deg, X, Y, Z)
    sh = _shift_table(p, n)
    c1 = emb[0].coeffs[:, :, None, None]
    c2 = emb[1].coeffs[:, None, :, None]
    c3 = emb[2].coeffs[:, None, None, :]
    c4 = emb[3].coeffs[:, sh][:, :, :, None]
    c5 = emb[4].coeffs[:, sh][:, :, None, :]
    c6 = emb[5].coeffs[:, sh][:, None, :, :]
    xyz = sh[sh]  # [x, y, z] -> index of x + y + z
    c7 = emb[6].coeffs[:, xyz]
    prod = R.mul_arrays(c1, c2)
    for c in (c3, c4, c5, c6, c7, phase):
        prod = R.mul_arrays(prod, c)
    den = size**3
    for b in emb:
        den *= b.den
    total = prod.reshape(prod.shape[0], -1).astype(object).sum(axis=1)
    return CorrValue.from_sum(R, np.array([int(v) for v in total]), den)


def three_correlation(b1, b2, b3, A: MultilinearForm, budget: Budget = DEFAULT_BUDGET) -> CorrValue:
    """Exact E_{u,v} b1(u) b2(v) b3(u+v) w^{A(u,v)} for bilinear A."""
    p, n = b1.p, b1.n
    size = p**n
    R = ring(p, 1)
    for b in (b1, b2, b3):
        if not b.exact:
            raise PreconditionError("exact witness functions required")
        R = common_ring(R, b.ring)
    e1, e2, e3 = (b.embed(R) for b in (b1, b2, b3))
    square = pair_square(A) * (R.N // p)
    phase = R.roots_to_coeffs(square)
    sh = _shift_table(p, n)
    prod = R.mul_arrays(e1.coeffs[:, :, None], e2.coeffs[:, None, :])
    prod = R.mul_arrays(prod, e3.coeffs[:, sh])
    prod = R.mul_arrays(prod, phase)
    den = size**2 * e1.den * e2.den * e3.den
    total = prod.reshape(prod.shape[0], -1).astype(object).sum(axis=1)
    return CorrValue.from_sum(R, np.array([int(v) for v in total]), den)


# -- witnesses and ledgers --


@dataclass(frozen=True)
class CorrelationWitness:
    """Seven 1-bounded functions plus the form they correlate with.

    ``delta`` is the exactly measured correlation of the stored data.
    """

    form: object  # MultilinearForm (trilinear) or MultiaffineForm
    bs: tuple
    delta: CorrValue

    @classmethod
    def make(cls, form, bs, budget: Budget = DEFAULT_BUDGET) -> "CorrelationWitness":
        if len(bs) != 7:
            raise PreconditionError("the witness pattern needs exactly seven functions")
        for b in bs:
            if not b.check_bounded():
                raise PreconditionError("witness function exceeds sup-norm 1")
        delta = seven_correlation(bs, form, budget)
        return cls(form, tuple(bs), delta)

    @classmethod
    def all_ones(cls, form, p: int, n: int, budget: Budget = DEFAULT_BUDGET) -> "CorrelationWitness":
        return cls.make(form, tuple(BoundedFunction.ones(p, n) for _ in range(7)), budget)

    def delta_positive(self) -> bool:
        return self.delta.mag2() > RealSurd(Fraction(0))


@dataclass(frozen=True)
class LedgerEntry:
    claim: str
    measured: str
    bound: str
    holds: bool

    def __str__(self):
        flag = "ok " if self.holds else "FAIL"
        return f"[{flag}] {self.claim}: measured {self.measured}, bound {self.bound}"


def bias_vs_delta_power(p: int, claim: str, bias: Fraction, delta: CorrValue, power: int) -> LedgerEntry:
    """Entry for 'arank(X) <= power * log_p(1/delta)', checked as bias >= delta^power."""
    holds = RealSurd(bias) ** 2 >= delta.mag2() ** power
    arank = math.inf if bias == 0 else -math.log(bias) / math.log(p)
    logd = _log_inv_float(p, delta)
    return LedgerEntry(claim, f"arank={arank:.4f}", f"{power}*log_p(1/delta)={power * logd:.4f}", bool(holds))


def codim_vs_delta_power(p: int, claim: str, codim: int, delta: CorrValue, power: int) -> LedgerEntry:
    holds = RealSurd(Fraction(1, p**codim)) ** 2 >= delta.mag2() ** power
    logd = _log_inv_float(p, delta)
    return LedgerEntry(claim, f"codim={codim}", f"{power}*log_p(1/delta)={power * logd:.4f}", bool(holds))


def count_vs_delta_power(p: int, claim: str, count: int, delta: CorrValue, power: int) -> LedgerEntry:
    holds = RealSurd(Fraction(1, p**count)) ** 2 >= delta.mag2() ** power
    logd = _log_inv_float(p, delta)
    return LedgerEntry(claim, f"count={count}", f"{power}*log_p(1/delta)={power * logd:.4f}", bool(holds))


def delta_vs_delta_power(claim: str, out: CorrValue, base: CorrValue, power: int) -> LedgerEntry:
    holds = out.mag2() >= base.mag2() ** power
    return LedgerEntry(
        claim,
        f"|corr|={out.modulus_float():.6g}",
        f"delta^{power}={base.modulus_float() ** power:.6g}",
        bool(holds),
    )


def int_bound_entry(claim: str, value: int, bound: int) -> LedgerEntry:
    return LedgerEntry(claim, str(value), str(bound), value <= bound)


def _log_inv_float(p: int, delta: CorrValue) -> float:
    m = delta.modulus_float()
    return math.inf if m == 0 else -math.log(m) / math.log(p)


# -- the Cauchy-Schwarz defect bound for bilinear kernels --


@dataclass(frozen=True)
class DefectResult:
    delta: CorrValue
    defect_bias: Fraction
    holds: bool


def gt_defect(A: MultilinearForm, b1, b2, b3, budget: Budget = DEFAULT_BUDGET) -> DefectResult:
    """Check bias(A - A^T) >= delta^8 for the three-function correlation delta.

    Four Cauchy-Schwarz applications guarantee the inequality for any
    1-bounded b's; it is recomputed exactly here rather than trusted.
    """
    if A.k != 2:
        raise DimensionMismatch("defect bound needs a bilinear kernel")
    for b in (b1, b2, b3):
        if not b.check_bounded():
            raise PreconditionError("witness function exceeds sup-norm 1")
    delta = three_correlation(b1, b2, b3, A, budget)
    defect = A - permute(A, (1, 0))
    bias = analytic_rank(defect, budget).bias
    holds = RealSurd(bias) ** 2 >= delta.mag2() ** 8
    return DefectResult(delta, bias, bool(holds))


# -- permutation defects for trilinear forms --


@dataclass(frozen=True)
class PermutationDefects:
    biases: dict  # perm tuple -> Fraction bias of T - T_pi
    ledger: tuple

    def all_hold(self) -> bool:
        return all(e.holds for e in self.ledger)


def permutation_defects(
    T: MultilinearForm, witness: CorrelationWitness, budget: Budget = DEFAULT_BUDGET
) -> PermutationDefects:
    """arank(T - T_pi) <= 16 log_p(1/delta) for every pi, with the sharper
    8 log_p(1/delta) for transpositions, all checked in exact bias form."""
    if T.k != 3:
        raise DimensionMismatch("permutation defects need a trilinear form")
    if isinstance(witness.form, MultilinearForm) and witness.form != T:
        raise PreconditionError("witness was measured against a different form")
    if not witness.delta_positive():
        raise PreconditionError("witness correlation is zero")
    delta = witness.delta
    biases = {}
    entries = []
    for pi in S3:
        defect = T - permute(T, pi)
        bias = analytic_rank(defect, budget).bias
        biases[pi] = bias
        entries.append(
            bias_vs_delta_power(T.p, f"arank(T - T_{pi}) <= 16 log(1/delta)", bias, delta, 16)
        )
        if pi in TRANSPOSITIONS_3:
            entries.append(
                bias_vs_delta_power(T.p, f"arank(T - T_{pi}) <= 8 log(1/delta)", bias, delta, 8)
            )
    return PermutationDefects(biases, tuple(entries))


# -- symmetric subspace from certificates --


def symmetric_subspace(T: MultilinearForm, certs: dict) -> Subspace:
    """Common kernel of the single-slot linear factors of the certificates.

    ``certs`` maps each non-identity permutation to a verified certificate
    for T - T_pi; the form restricted to the result is symmetric.
    """
    forms = []
    for pi, cert in certs.items():
        expected = T - permute(T, pi)
        if cert.claimed_form != expected:
            raise PreconditionError(f"certificate for {pi} is for the wrong form")
        if not rank.verify_certificate(cert).ok:
            raise PreconditionError(f"certificate for {pi} does not verify")
        forms.extend(cert.linear_factors())
    U = fpspace.kernel(T.p, T.n, forms)
    RU = restrict(T, U)
    if not is_symmetric(RU):  # pragma: no cover
        raise InternalCheckError("restriction is not symmetric despite vanishing defects")
    return U


def default_defect_certificates(
    T: MultilinearForm, budget: Budget = DEFAULT_BUDGET
) -> dict:
    """Certificates for every T - T_pi: trivial when the defect vanishes,
    otherwise by exhaustive search (tiny instances only)."""
    certs = {}
    for pi in S3:
        if pi == tuple(range(3)):
            continue
        D = T - permute(T, pi)
        if D.is_zero():
            certs[pi] = rank.empty_certificate(D)
        else:
            certs[pi] = rank.prank_certificate_search(D, budget)
    return certs


# -- p = 3 classical reduction --


def diagonal_linear_form(T: MultilinearForm) -> tuple:
    """The linear form x -> T(x, x, x) for symmetric trilinear T over F_3.

    Linearity is asserted by exhaustive comparison against the candidate
    built from the basis values.
    """
    if T.p != 3 or T.k != 3:
        raise PreconditionError("diagonal linearity needs p = 3 and k = 3")
    if not is_symmetric(T):
        raise PreconditionError("form is not symmetric")
    n = T.n
    coeffs = tuple(T.eval(fpspace.unit_vec(n, i), fpspace.unit_vec(n, i), fpspace.unit_vec(n, i)) for i in range(n))
    for x in all_vectors(3, n):
        if T.eval(x, x, x) != fpspace.dot(3, coeffs, x):  # pragma: no cover
            raise InternalCheckError("diagonal map is not linear; form data corrupt")
    return coeffs


def csm_subspace_f3(T: MultilinearForm) -> Subspace:
    """Codimension <= 1 subspace where a symmetric F_3 trilinear form is CSM."""
    L = diagonal_linear_form(T)
    U = fpspace.kernel(3, T.n, [L] if any(L) else [])
    if not is_csm(restrict(T, U)):  # pragma: no cover
        raise InternalCheckError("restriction to the diagonal kernel is not CSM")
    return U


# -- p = 2 nCSM reduction --


def ncsm_subspace_f2(
    T: MultilinearForm, witness: CorrelationWitness, budget: Budget = DEFAULT_BUDGET
) -> tuple[Subspace, BilinearForm, tuple]:
    """Nullspace of B(x,y) = T(x,x,y) - T(x,y,y); the restriction is an nCSM.

    Returns (U, B, ledger) with the codim U <= 8 log_2(1/delta) entry.
    """
    if T.p != 2 or T.k != 3:
        raise PreconditionError("this reduction needs p = 2 and k = 3")
    if not is_symmetric(T):
        raise PreconditionError("form is not symmetric")
    n = T.n
    mat = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            ei, ej = fpspace.unit_vec(n, i), fpspace.unit_vec(n, j)
            mat[i, j] = (T.eval(ei, ei, ej) - T.eval(ei, ej, ej)) % 2
    B = BilinearForm(2, n, mat)
    for x in all_vectors(2, n):
        for y in all_vectors(2, n):
            direct = (T.eval(x, x, y) - T.eval(x, y, y)) % 2
            if direct != B.eval(x, y):  # pragma: no cover
                raise InternalCheckError("defect kernel is not bilinear; form data corrupt")
    _, _, U = bilinear_rank(B)
    RU = restrict(T, U)
    if not is_ncsm(RU):  # pragma: no cover
        raise InternalCheckError("restriction to the defect nullspace is not an nCSM")
    entry = codim_vs_delta_power(2, "codim U <= 8 log2(1/delta)", U.codim, witness.delta, 8)
    return U, B, (entry,)


# -- Cauchy-Schwarz removal of the lower-order multiaffine parts --


def multiaffine_cs(
    phi: MultiaffineForm, bs, budget: Budget = DEFAULT_BUDGET
) -> tuple[MultilinearForm, tuple, CorrValue, tuple]:
    """From a triaffine correlation to a trilinear one at cost delta -> delta^8.

    Three Cauchy-Schwarz steps eliminate b1..b6 and the affine parts of phi;
    the surviving witness functions are shifted copies (and conjugates) of
    b7.  The shift sum s is chosen by deterministic argmax, and the output
    correlation is measured exactly and checked against delta^8.
    """
    p, n = phi.p, phi.n
    delta_in = seven_correlation(bs, phi, budget)
    T = multilinear_part(phi)
    b7 = bs[6]
    best = None
    for s in all_vectors(p, n):
        shifted = b7.shift_arg(s)
        bprime = _cs_witness_functions(shifted, b7, s)
        val = seven_correlation(bprime, T, budget)
        key = val.mag2()
        if best is None or key > best[0]:
            best = (key, s, bprime, val)
    _, s, bprime, delta_out = best
    entry = delta_vs_delta_power("multiaffine CS: |corr(T)| >= delta^8", delta_out, delta_in, 8)
    if not entry.holds:  # pragma: no cover
        raise InternalCheckError("Cauchy-Schwarz output correlation below delta^8")
    return T, bprime, delta_out, (entry,)


def _cs_witness_functions(shifted: BoundedFunction, b7: BoundedFunction, s) -> tuple:
    """The seven functions surviving the three Cauchy-Schwarz steps.

    All are shifted copies of b7 (conjugated on the pair sums), with the
    constant conj(b7(s)) folded into the first.
    """
    p, n = b7.p, b7.n
    sc = shifted.conj()
    # fold the constant conj(b7(s)) into b1'
    if b7.exact:
        R = b7.ring
        const = R.conj(b7.coeffs[:, vec_index(p, s)])
        c = R.mul_arrays(shifted.coeffs, const.reshape(-1, *([1] * 1)))
        b1p = BoundedFunction(p, n, R, c, shifted.den * b7.den)
    else:  # pragma: no cover
        b1p = BoundedFunction(p, n, None, None, 1, shifted.values * np.conj(b7.values[vec_index(p, s)]))
    return (b1p, shifted, shifted, sc, sc, sc, shifted)


# -- reports and the two symmetrization pipelines --


@dataclass(frozen=True)
class SymmetrizationReport:
    input_form: MultilinearForm
    output_form: MultilinearForm
    certificate: RankCertificate
    ledger: tuple
    subspace: Subspace

    def all_hold(self) -> bool:
        return all(e.holds for e in self.ledger)

    def verify(self) -> bool:
        return bool(rank.verify_certificate(self.certificate).ok)


def _resolve_certs(T: MultilinearForm, certs, budget: Budget) -> dict:
    if certs is None:
        return default_defect_certificates(T, budget)
    return certs


def symmetrize_classical(
    T: MultilinearForm,
    witness: CorrelationWitness | None,
    certs: dict | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> SymmetrizationReport:
    """Classical symmetrization for p >= 3: output S in CSM^3(V) with a
    verified certificate of <= 15r + 3 terms for T - S.

    For p = 3 the codimension-1 diagonal reduction is needed; for p = 5
    every symmetric trilinear form is already classical and the step is
    skipped (bound 15r).
    """
    if T.p not in (3, 5):
        raise PreconditionError("classical symmetrization needs p in {3, 5}")
    ledger = []
    if witness is not None:
        defects = permutation_defects(T, witness, budget)
        ledger.extend(defects.ledger)
    certs = _resolve_certs(T, certs, budget)
    r = max((len(c) for c in certs.values()), default=0)
    U1 = symmetric_subspace(T, certs)
    ledger.append(int_bound_entry("codim U <= 5r", U1.codim, 5 * r))
    if T.p == 3:
        U2_inner = csm_subspace_f3(restrict(T, U1))
        ledger.append(int_bound_entry("diagonal reduction codim <= 1", U2_inner.codim, 1))
        W = fpspace.compose_subspace(U1, U2_inner)
        bound = 15 * r + 3
    else:
        W = U1
        bound = 15 * r
    S = mforms.extend(restrict(T, W), W, fpspace.complement(W))
    if not is_csm(S):  # pragma: no cover
        raise InternalCheckError("classical symmetrization output is not CSM")
    cert = vanishing_decomposition(T - S, W)
    ledger.append(int_bound_entry(f"prank(T - S) <= {bound}", len(cert), bound))
    report = SymmetrizationReport(T, S, cert, tuple(ledger), W)
    if not report.verify():  # pragma: no cover
        raise InternalCheckError("symmetrization certificate failed verification")
    return report


def symmetrize_nonclassical_p2(
    T: MultilinearForm,
    witness: CorrelationWitness,
    certs: dict | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> SymmetrizationReport:
    """Non-classical symmetrization for p = 2: output S in nCSM^3(V) with a
    verified certificate of <= 432 log_2(1/delta) terms for T - S.

    Chain: permutation defects -> symmetric subspace U -> best coset
    restriction -> Cauchy-Schwarz to the trilinear part -> nCSM nullspace
    W -> extension.  Every codimension and length claim is ledgered.
    """
    if T.p != 2 or T.k != 3:
        raise PreconditionError("this pipeline needs p = 2 and k = 3")
    if not witness.delta_positive():
        raise PreconditionError("witness correlation is zero")
    delta = witness.delta
    ledger = []
    defects = permutation_defects(T, witness, budget)
    ledger.extend(defects.ledger)
    certs = _resolve_certs(T, certs, budget)
    U1 = symmetric_subspace(T, certs)
    ledger.append(codim_vs_delta_power(2, "codim U <= 80 log2(1/delta)", U1.codim, delta, 80))

    # best coset restriction of the witness to U1
    shifted_witness, coset_entry = _best_coset_witness(T, witness, U1, budget)
    ledger.append(coset_entry)

    # strip the affine parts produced by the coset shift
    T_U, bprime, delta2, cs_ledger = multiaffine_cs(shifted_witness.form, shifted_witness.bs, budget)
    ledger.extend(cs_ledger)
    if T_U != restrict(T, U1):  # pragma: no cover
        raise InternalCheckError("trilinear part after coset shift is not the restriction")
    witness2 = CorrelationWitness(T_U, bprime, delta2)

    # nCSM reduction inside U1
    W_inner, B, inner_ledger = ncsm_subspace_f2(T_U, witness2, budget)
    ledger.extend(inner_ledger)
    ledger.append(
        codim_vs_delta_power(2, "codim_U W <= 64 log2(1/delta)", W_inner.codim, delta, 64)
    )
    W = fpspace.compose_subspace(U1, W_inner)
    ledger.append(codim_vs_delta_power(2, "codim_V W <= 144 log2(1/delta)", W.codim, delta, 144))

    S = mforms.extend(restrict(T, W), W, fpspace.complement(W))
    if not is_ncsm(S):  # pragma: no cover
        raise InternalCheckError("non-classical symmetrization output is not an nCSM")
    cert = vanishing_decomposition(T - S, W)
    ledger.append(int_bound_entry("prank(T - S) <= 3 codim_V W", len(cert), 3 * W.codim))
    ledger.append(
        count_vs_delta_power(2, "prank(T - S) <= 432 log2(1/delta)", len(cert), delta, 432)
    )
    report = SymmetrizationReport(T, S, cert, tuple(ledger), W)
    if not report.verify():  # pragma: no cover
        raise InternalCheckError("symmetrization certificate failed verification")
    return report


@dataclass(frozen=True)
class ShiftedWitness:
    form: MultiaffineForm  # triaffine on U-coordinates
    bs: tuple
    delta: CorrValue
    shifts: tuple


def _best_coset_witness(
    T: MultilinearForm, witness: CorrelationWitness, U: Subspace, budget: Budget
) -> tuple[ShiftedWitness, LedgerEntry]:
    """Argmax coset restriction: the average over coset triples equals the
    full correlation, so the best triple is at least delta."""
    p, n = T.p, T.n
    reps = list(fpspace.enumerate_subspace(fpspace.complement(U), budget))
    phi_V = MultiaffineForm.from_multilinear(T)
    best = None
    for x0 in reps:
        for y0 in reps:
            for z0 in reps:
                phi_shift = phi_V.shifted_arguments((x0, y0, z0))
                phi_U = restrict_multiaffine(phi_shift, U)
                b = witness.bs
                bs_U = (
                    b[0].restrict_to_coset(U, x0),
                    b[1].restrict_to_coset(U, y0),
                    b[2].restrict_to_coset(U, z0),
                    b[3].restrict_to_coset(U, vec_add(p, x0, y0)),
                    b[4].restrict_to_coset(U, vec_add(p, x0, z0)),
                    b[5].restrict_to_coset(U, vec_add(p, y0, z0)),
                    b[6].restrict_to_coset(U, vec_add(p, vec_add(p, x0, y0), z0)),
                )
                val = seven_correlation(bs_U, phi_U, budget)
                key = val.mag2()
                if best is None or key > best[0]:
                    best = (key, (x0, y0, z0), phi_U, bs_U, val)
    key, shifts, phi_U, bs_U, val = best
    holds = key >= witness.delta.mag2()
    entry = LedgerEntry(
        "coset restriction keeps |corr| >= delta",
        f"{val.modulus_float():.6g}",
        f"{witness.delta.modulus_float():.6g}",
        bool(holds),
    )
    if not holds:  # pragma: no cover
        raise InternalCheckError("coset argmax fell below the average")
    return ShiftedWitness(phi_U, bs_U, val, shifts), entry


def restrict_multiaffine(phi: MultiaffineForm, U: Subspace) -> MultiaffineForm:
    comps = {}
    for slots, comp in phi.components:
        if len(slots) == 0:
            comps[()] = int(comp.coeffs)
        else:
            comps[tuple(sorted(slots))] = restrict(comp, U)
    return MultiaffineForm.make(phi.p, U.dim, phi.k, comps)
