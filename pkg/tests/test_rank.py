import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from hofa import fpspace as fs
from hofa import mforms as mf
from hofa import rank as rk
from hofa.errors import PreconditionError
from hofa.mforms import MultilinearForm


class TestAnalyticRank:
    def test_zero_form(self):
        res = rk.analytic_rank(MultilinearForm.zero(3, 2, 3))
        assert res.bias == 1 and res.arank == 0

    def test_identity_matrix(self):
        T = MultilinearForm.from_entries(2, 2, 2, {(0, 0): 1, (1, 1): 1})
        res = rk.analytic_rank(T)
        assert res.bias == Fraction(1, 4)
        assert abs(res.arank - 2) < 1e-12

    def test_diagonal_cube(self):
        T = MultilinearForm.from_entries(2, 1, 3, {(0, 0, 0): 1})
        res = rk.analytic_rank(T)
        assert res.bias == Fraction(3, 4)
        assert abs(res.arank - math.log(4 / 3) / math.log(2)) < 1e-12

    def test_slice_vs_naive(self):
        rng = random.Random(0)
        for _ in range(100):
            p, n, k = rng.choice([(2, 2, 3), (2, 3, 3), (2, 4, 3), (3, 2, 3), (2, 4, 2)])
            T = mf.random_form(rng, p, n, k)
            assert rk.naive_bias(T) == rk.analytic_rank(T).bias

    def test_subadditivity(self):
        rng = random.Random(1)
        for _ in range(200):
            p, n, k = rng.choice([(2, 2, 3), (3, 2, 2), (2, 3, 2)])
            S = mf.random_form(rng, p, n, k)
            T = mf.random_form(rng, p, n, k)
            assert rk.analytic_rank(S + T).bias >= (
                rk.analytic_rank(S).bias * rk.analytic_rank(T).bias
            )


class TestBilinearRank:
    def test_zero(self):
        r, left, right = rk.bilinear_rank(MultilinearForm.zero(2, 3, 2))
        assert r == 0 and right.dim == 3

    def test_antidiagonal(self):
        B = MultilinearForm.from_entries(2, 2, 2, {(0, 1): 1, (1, 0): 1})
        r, left, right = rk.bilinear_rank(B)
        assert r == 2 and left.dim == 0 and right.dim == 0

    def test_rank_one_nullspace(self):
        B = MultilinearForm.from_entries(3, 3, 2, {(0, 0): 1})
        r, left, right = rk.bilinear_rank(B)
        assert r == 1
        assert right.vanishing_forms == ((1, 0, 0),)

    @pytest.mark.parametrize("p,n", [(2, 2), (3, 2)])
    def test_equals_analytic_exhaustively(self, p, n):
        for coefs in itertools.product(range(p), repeat=n * n):
            B = MultilinearForm(p, n, 2, np.array(coefs).reshape(n, n))
            r = rk.bilinear_rank(B)[0]
            assert rk.analytic_rank(B).bias == Fraction(1, p**r)


class TestVanishingDecomposition:
    def test_trivial(self):
        T = MultilinearForm.zero(2, 2, 3)
        cert = rk.vanishing_decomposition(T, fs.Subspace.full(2, 2))
        assert len(cert) == 0 and rk.verify_certificate(cert).ok

    def test_cube_on_hyperplane(self):
        T = MultilinearForm.from_entries(2, 2, 3, {(0, 0, 0): 1})
        U = fs.kernel(2, 2, [(1, 0)])
        cert = rk.vanishing_decomposition(T, U)
        assert len(cert) <= 3
        assert rk.verify_certificate(cert).ok

    def test_length_bound_random(self):
        rng = random.Random(2)
        for _ in range(40):
            p, n, k = rng.choice([(2, 3, 3), (3, 2, 3), (2, 3, 2), (3, 3, 2)])
            U = fs.random_subspace(rng, p, n)
            acc = MultilinearForm.zero(p, n, k)
            for L in U.vanishing_forms:
                slot = rng.randrange(k)
                term = rk.CertTerm(
                    (slot,),
                    MultilinearForm(p, n, 1, np.array(L)),
                    mf.random_form(rng, p, n, k - 1),
                )
                acc = acc + MultilinearForm(p, n, k, term.tensor(k))
            cert = rk.vanishing_decomposition(acc, U)
            assert len(cert) <= k * U.codim
            assert rk.verify_certificate(cert).ok
            # the produced certificate also bounds the analytic rank
            assert rk.analytic_rank(acc).bias >= Fraction(1, p ** len(cert))

    def test_precondition_violation_carries_witness(self):
        T = MultilinearForm.from_entries(2, 2, 3, {(0, 0, 0): 1})
        with pytest.raises(PreconditionError) as exc:
            rk.vanishing_decomposition(T, fs.Subspace.full(2, 2))
        args = exc.value.witness
        assert T.eval(*args) != 0


class TestCertificates:
    def test_corrupted_certificate_fails_with_witness(self):
        T = MultilinearForm.from_entries(2, 2, 3, {(0, 0, 0): 1})
        cert = rk.prank_certificate_search(T)
        wrong = rk.RankCertificate(
            T + MultilinearForm.from_entries(2, 2, 3, {(1, 1, 1): 1}), cert.terms
        )
        res = rk.verify_certificate(wrong)
        assert not res.ok and res.witness is not None

    def test_empty_vs_zero(self):
        Z = MultilinearForm.zero(2, 2, 3)
        assert rk.verify_certificate(rk.empty_certificate(Z)).ok


class TestPrankSearch:
    def test_zero_and_rank_one(self):
        assert rk.prank_search(MultilinearForm.zero(2, 2, 3)) == 0
        T = MultilinearForm.from_entries(2, 2, 3, {(0, 0, 0): 1})
        assert rk.prank_search(T) == 1

    def test_census_arank_le_prank(self):
        ranks, parents = rk.prank_table(2, 2, 3)
        assert len(ranks) == 256
        for key, r in ranks.items():
            T = MultilinearForm(2, 2, 3, np.frombuffer(key, dtype=np.int8).reshape(2, 2, 2).copy())
            assert rk.analytic_rank(T).bias >= Fraction(1, 2**r)
            cert = rk.certificate_from_table(T, parents)
            assert len(cert) == r and rk.verify_certificate(cert).ok

    def test_unknown_on_large_instance(self):
        rng = random.Random(3)
        T = mf.random_form(rng, 2, 3, 3)  # 2^27 tensor space: search is off-budget
        res = rk.prank_search(T)
        if isinstance(res, rk.PrankUnknown):
            assert rk.analytic_rank(T).bias >= Fraction(1, 2**res.lower_bound) or res.lower_bound >= 0

    def test_arank_ceil(self):
        assert rk.arank_ceil(2, Fraction(1)) == 0
        assert rk.arank_ceil(2, Fraction(3, 4)) == 1
        assert rk.arank_ceil(2, Fraction(1, 4)) == 2
