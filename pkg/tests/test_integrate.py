import itertools
import random

import pytest

from hofa import integrate as ig
from hofa import mforms as mf
from hofa.errors import PreconditionError
from hofa.fpspace import all_vectors
from hofa.mforms import MultilinearForm, total_derivative
from hofa.ncpoly import Monomial, NcPoly, random_poly
from hofa.torus import TorusValue


class TestIntegrateCsm:
    def test_zero(self):
        assert ig.integrate_csm(MultilinearForm.zero(2, 2, 3)) == NcPoly.zero(2, 2)

    def test_f2_product(self):
        T = MultilinearForm.from_entries(2, 2, 2, {(0, 1): 1, (1, 0): 1})
        P = ig.integrate_csm(T)
        assert P == NcPoly.from_classical(2, 2, {(1, 1): 1}, constant=0)

    def test_f3_square(self):
        T = MultilinearForm.from_entries(3, 1, 2, {(0, 0): 2})
        P = ig.integrate_csm(T)
        assert P == NcPoly.from_classical(3, 1, {(2,): 1}, constant=0)

    def test_always_classical(self):
        rng = random.Random(0)
        for trial in range(25):
            p, n, k = rng.choice([(2, 2, 3), (3, 2, 3), (2, 3, 2)])
            Pc = random_poly(p, n, k, depth_allowed=False, seed=trial)
            T = total_derivative(Pc, k)
            P = ig.integrate_csm(T)
            assert P.is_classical()
            assert total_derivative(P, k) == T

    def test_rejects_non_csm(self):
        T = MultilinearForm.from_entries(3, 1, 3, {(0, 0, 0): 1})  # nCSM, not CSM
        with pytest.raises(PreconditionError):
            ig.integrate_csm(T)


class TestIntegrateNcsm:
    def test_depth_square(self):
        T = MultilinearForm.from_entries(2, 1, 2, {(0, 0): 1})
        P = ig.integrate_ncsm(T)
        assert P.monomials == (Monomial((1,), 1, 1),)

    def test_explicit_cubic(self):
        ent = {}
        for idx in set(itertools.permutations((0, 0, 1))):
            ent[idx] = 1
        for idx in set(itertools.permutations((0, 1, 1))):
            ent[idx] = 1
        T = MultilinearForm.from_entries(2, 2, 3, ent)
        assert mf.is_ncsm(T)
        P = ig.integrate_ncsm(T)
        assert total_derivative(P, 3) == T

    def test_kernel_characterization(self):
        rng = random.Random(1)
        for trial in range(25):
            p, n, k = rng.choice([(2, 2, 3), (2, 3, 3), (3, 2, 3), (2, 2, 4)])
            P0 = random_poly(p, n, k, True, seed=trial)
            T = total_derivative(P0, k)
            P = ig.integrate_ncsm(T)
            assert (P - P0).degree() <= k - 1

    def test_output_uses_top_degree_monomials(self):
        rng = random.Random(2)
        for trial in range(20):
            p, n, k = rng.choice([(2, 2, 3), (3, 2, 3)])
            T = mf.random_ncsm_form(rng, p, n, k)
            P = ig.integrate_ncsm(T)
            assert all(m.degree(p) == k for m in P.monomials)
            assert total_derivative(P, k) == T

    def test_rejects_non_ncsm_with_witness(self):
        ent = {}
        for idx in set(itertools.permutations((0, 0, 1))):
            ent[idx] = 1
        T = MultilinearForm.from_entries(2, 2, 3, ent)  # symmetric but not nCSM
        with pytest.raises(PreconditionError) as exc:
            ig.integrate_ncsm(T)
        j1, j2 = exc.value.witness
        assert int(T.coeffs[j1]) != int(T.coeffs[j2])

    def test_kernel_is_lower_degree(self):
        rng = random.Random(3)
        for trial in range(100):
            p, n, k = rng.choice([(2, 2, 3), (3, 2, 3)])
            P = random_poly(p, n, k - 1, True, seed=(trial, "k"))
            assert total_derivative(P, k).is_zero()

    def test_csm_ncsm_solver_consistency(self):
        rng = random.Random(4)
        for trial in range(20):
            p, n, k = rng.choice([(2, 2, 3), (3, 2, 3)])
            Pc = random_poly(p, n, k, depth_allowed=False, seed=(trial, "cs"))
            T = total_derivative(Pc, k)
            P1 = ig.integrate_csm(T)
            P2 = ig.integrate_ncsm(T)
            assert (P1 - P2).degree() <= k - 1


class TestCounting:
    @pytest.mark.parametrize(
        "p,k,n,expect_c",
        [(2, 3, 2, 3), (3, 3, 1, 1), (2, 3, 1, 1)],
    )
    def test_monomial_counts(self, p, k, n, expect_c):
        rep = ig.ncsm_count(p, n, k)
        assert rep.monomial_count == expect_c
        assert rep.agreement

    def test_linear_count_is_n(self):
        for p, n in [(2, 3), (3, 2), (2, 4)]:
            assert ig.ncsm_count(p, n, 1).monomial_count == n

    def test_census_sizes(self):
        rep = ig.ncsm_count(2, 2, 3)
        assert rep.ncsm_size == 8 and rep.ncsm_size_matches
        rep = ig.ncsm_count(3, 1, 3)
        assert rep.ncsm_size == 3 and rep.ncsm_size_matches

    def test_agreement_grid(self):
        for p in (2, 3):
            for k in (1, 2, 3, 4):
                for n in (1, 2, 3):
                    assert ig.ncsm_count(p, n, k).agreement, (p, k, n)
