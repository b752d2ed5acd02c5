import random
from fractions import Fraction

import numpy as np
import pytest

from hofa import analysis as an
from hofa.cyclotomic import RealSurd
from hofa.errors import BudgetExceeded
from hofa.fpspace import all_vectors
from hofa.ncpoly import Monomial, NcPoly, random_poly
from hofa.torus import TorusValue


def phase(P, conj=False):
    return an.BoundedFunction.from_poly_phase(P, conjugate=conj)


class TestMultDerivative:
    def test_constant_one(self):
        f = an.BoundedFunction.ones(2, 2)
        g = f.mult_derivative((1, 0))
        assert np.array_equal(g.coeffs, f.coeffs)

    def test_phase_identity(self):
        rng = random.Random(0)
        for trial in range(10):
            p, n = rng.choice([(2, 2), (3, 2)])
            P = random_poly(p, n, 2, True, seed=trial)
            h = tuple(rng.randrange(p) for _ in range(n))
            left = phase(P).mult_derivative(h)
            right = phase(P.add_derivative(h))
            assert np.array_equal(
                left.embed(right.ring if right.ring.N >= left.ring.N else left.ring).coeffs,
                right.embed(right.ring if right.ring.N >= left.ring.N else left.ring).coeffs,
            )

    def test_zero_shift_gives_modulus_squared(self):
        rng = random.Random(1)
        f = an.random_mu_p_function(rng, 2, 2, zeros=True)
        g = f.mult_derivative((0, 0))
        for x in all_vectors(2, 2):
            v = g.value_complex(x)
            assert abs(v.imag) < 1e-12 and v.real >= -1e-12


class TestGowersNorm:
    def test_ones(self):
        f = an.BoundedFunction.ones(2, 3)
        for d in (2, 3, 4):
            assert an.gowers_norm(f, d).is_one()

    def test_quadratic_phase_u2(self):
        f = phase(NcPoly.from_classical(2, 2, {(1, 1): 1}))
        val = an.gowers_norm(f, 2)
        assert val.power_surd() == RealSurd(Fraction(1, 4))

    def test_nonclassical_cubic_u4(self):
        P0 = NcPoly.make(2, 3, TorusValue.zero(2), [Monomial((1, 0, 0), 2, 1)])
        f = phase(P0)
        assert an.gowers_norm(f, 4).is_one()
        assert not an.gowers_norm(f, 3).is_one()

    def test_inductive_equals_direct(self):
        rng = random.Random(2)
        for _ in range(4):
            f = an.random_mu_p_function(rng, 2, 3)
            for d in (2, 3):
                assert an.gowers_norm(f, d).power_surd() == an.direct_gowers_power(f, d).power_surd()
        f = an.random_unimodular_exact(rng, 2, 2, 3)
        assert an.gowers_norm(f, 4).power_surd() == an.direct_gowers_power(f, 4).power_surd()
        for _ in range(2):
            f = an.random_mu_p_function(rng, 3, 2)
            for d in (2, 3):
                assert an.gowers_norm(f, d).power_surd() == an.direct_gowers_power(f, d).power_surd()

    def test_phase_fast_path_matches_generic(self):
        rng = random.Random(3)
        for _ in range(6):
            f = an.random_unimodular_exact(rng, 2, rng.choice([2, 3]), rng.choice([1, 2, 3]))
            stripped = an.BoundedFunction(f.p, f.n, f.ring, f.coeffs, f.den, exps=None)
            for d in (2, 3, 4):
                assert an.gowers_norm(f, d).power_surd() == an.gowers_norm(stripped, d).power_surd()

    def test_norm_one_iff_low_degree(self):
        rng = random.Random(4)
        for trial in range(16):
            p, n = rng.choice([(2, 2), (3, 2)])
            P = random_poly(p, n, rng.choice([1, 2, 3]), True, seed=trial)
            f = phase(P)
            for d in (2, 3):
                assert an.gowers_norm(f, d).is_one() == (P.degree() <= d - 1)

    def test_monotonicity(self):
        rng = random.Random(5)
        for _ in range(100):
            p, n = rng.choice([(2, 2), (2, 3), (3, 2)])
            f = an.random_mu_p_function(rng, p, n)
            a2 = an.gowers_norm(f, 2).power_surd()
            a3 = an.gowers_norm(f, 3).power_surd()
            a4 = an.gowers_norm(f, 4).power_surd()
            assert a2 * a2 <= a3
            assert a3 * a3 <= a4

    def test_budget(self):
        from hofa.config import Budget

        f = an.BoundedFunction.ones(2, 3)
        with pytest.raises(BudgetExceeded):
            an.gowers_norm(f, 4, Budget(gowers_cap=4))


class TestCorrelation:
    def test_self_phase(self):
        P = random_poly(2, 2, 2, True, seed=7)
        assert an.correlation(phase(P), P).mag2_is_one()

    def test_character_orthogonality(self):
        chi = NcPoly.from_classical(3, 2, {(1, 0): 1})
        other = NcPoly.from_classical(3, 2, {(0, 1): 1})
        c = an.correlation(phase(chi), other)
        assert c.mag2() == RealSurd(Fraction(0))

    def test_eighth_root_average(self):
        P0 = NcPoly.make(2, 1, TorusValue.zero(2), [Monomial((1,), 1, 1)])  # |x|/4
        c = an.correlation(phase(P0), NcPoly.zero(2, 1))
        assert c.mag2() == RealSurd(Fraction(1, 2))

    def test_global_constant_invariance(self):
        rng = random.Random(8)
        f = an.random_mu_p_function(rng, 2, 2)
        P = random_poly(2, 2, 2, True, seed=11)
        base = an.correlation(f, P).mag2()
        for t in range(1, 4):
            g = f.scale_phase(t, 2)
            assert an.correlation(g, P).mag2() == base


class TestU2Inverse:
    def test_character_recovery(self):
        rng = random.Random(9)
        for trial in range(10):
            p, n = rng.choice([(2, 3), (3, 2)])
            chi = tuple(rng.randrange(p) for _ in range(n))
            P = NcPoly.from_classical(
                p, n, {tuple(1 if i == j else 0 for i in range(n)): chi[j] for j in range(n)}
            )
            got, corr = an.u2_inverse(phase(P))
            assert got == chi and corr.mag2_is_one()

    def test_ones(self):
        got, corr = an.u2_inverse(an.BoundedFunction.ones(2, 3))
        assert got == (0, 0, 0) and corr.mag2_is_one()

    def test_argmax_matches_bruteforce(self):
        rng = random.Random(10)
        for _ in range(5):
            f = an.random_mu_p_function(rng, 2, 3)
            got, corr = an.u2_inverse(f)
            best = max(
                (
                    an.correlation(
                        f,
                        NcPoly.from_classical(
                            2, 3, {tuple(1 if i == j else 0 for i in range(3)): chi[j] for j in range(3)}
                        ),
                    ).mag2()
                    for chi in all_vectors(2, 3)
                ),
            )
            assert corr.mag2() == best


class TestU3Oracle:
    def test_recovers_quadratic(self):
        for seed in (3, 4, 5):
            Q0 = random_poly(2, 2, 2, True, seed=seed)
            Q, corr = an.u3_inverse_bruteforce(phase(Q0))
            assert corr.mag2_is_one()

    def test_ones(self):
        Q, corr = an.u3_inverse_bruteforce(an.BoundedFunction.ones(2, 2))
        assert Q == NcPoly.zero(2, 2) and corr.mag2_is_one()

    def test_classical_only_f3(self):
        Q0 = random_poly(3, 2, 2, False, seed=6)
        Q, corr = an.u3_inverse_bruteforce(phase(Q0), classical_only=True)
        assert corr.mag2_is_one() and Q.is_classical()

    def test_argmax_is_global(self):
        # corrupt one point of a quadratic phase and compare with a naive scan
        rng = random.Random(12)
        Q0 = random_poly(2, 2, 2, True, seed=13)
        f = phase(Q0)
        f = f.with_replaced_values({(0, 1): 3})
        Q, corr = an.u3_inverse_bruteforce(f)
        import itertools

        from hofa.ncpoly import basis_tuples

        tuples = basis_tuples(2, 2, 2, True)
        best = None
        for cand in itertools.product(range(2), repeat=len(tuples)):
            monos = [Monomial(e, j, c) for (e, j), c in zip(tuples, cand) if c]
            P = NcPoly.make(2, 2, TorusValue.zero(2), monos)
            v = an.correlation(f, P).mag2()
            if best is None or v > best:
                best = v
        assert corr.mag2() == best


class TestOctolinear:
    def test_all_ones(self):
        gs = {S: an.BoundedFunction.ones(2, 2) for S in range(8)}
        avg = an.octolinear_average(gs)
        assert avg.mag2_is_one()
        holds, norms = an.gcs_check(gs, avg)
        assert holds and all(v.is_one() for v in norms.values())

    def test_common_quadratic_phase(self):
        g = phase(random_poly(2, 2, 2, True, seed=14))
        gs = {S: g for S in range(8)}
        avg = an.octolinear_average(gs)
        assert avg.mag2_is_one()
        assert an.gcs_check(gs, avg)[0]

    def test_gcs_random_phases(self):
        rng = random.Random(15)
        for _ in range(3):
            gs = {S: an.random_mu_p_function(rng, 2, 2) for S in range(8)}
            avg = an.octolinear_average(gs)
            assert an.gcs_check(gs, avg)[0]


class TestFloatMode:
    def test_float_norms_close(self):
        rng = random.Random(16)
        f = an.random_mu_p_function(rng, 2, 2)
        fl = an.BoundedFunction.from_complex_values(2, 2, f.to_complex_table())
        for d in (2, 3):
            exact = an.gowers_norm(f, d).float_power
            approx = an.gowers_norm(fl, d).float_power
            assert abs(exact - approx) < 1e-9

    def test_bounded_check(self):
        with pytest.raises(Exception):
            an.BoundedFunction.from_complex_values(2, 1, np.array([2.0 + 0j, 0j]))
