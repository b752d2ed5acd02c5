import random

import numpy as np
import pytest

from hofa import analysis as an
from hofa import mforms as mf
from hofa import rank as rk
from hofa import serialize as sz
from hofa.fpspace import random_subspace
from hofa.ncpoly import random_poly


def test_poly_round_trip():
    rng = random.Random(0)
    for t in range(25):
        p, n = rng.choice([(2, 2), (3, 2), (2, 3)])
        P = random_poly(p, n, rng.choice([1, 2, 3]), True, seed=t)
        assert sz.load_poly(sz.dump_poly(P)) == P


def test_form_round_trip():
    rng = random.Random(1)
    for t in range(25):
        p, n, k = rng.choice([(2, 2, 3), (3, 2, 2), (2, 3, 3)])
        T = mf.random_form(rng, p, n, k)
        assert sz.load_form(sz.dump_form(T)) == T


def test_multiaffine_round_trip():
    rng = random.Random(2)
    for t in range(10):
        p, n = rng.choice([(2, 2), (3, 2)])
        comps = {
            (0, 1, 2): mf.random_form(rng, p, n, 3),
            (0, 2): mf.random_form(rng, p, n, 2),
            (1,): mf.random_form(rng, p, n, 1),
            (): rng.randrange(p),
        }
        phi = mf.MultiaffineForm.make(p, n, 3, comps)
        assert sz.load_form(sz.dump_multiaffine(phi)) == phi


def test_function_round_trip():
    rng = random.Random(3)
    for t in range(10):
        p, n = rng.choice([(2, 2), (3, 2)])
        f = an.random_unimodular_exact(rng, p, n, rng.choice([1, 2]))
        g = sz.load_function(sz.dump_function(f))
        assert np.array_equal(g.coeffs, f.coeffs)
        assert g.den == f.den and g.ring.N == f.ring.N


def test_float_function_round_trip():
    f = an.BoundedFunction.from_complex_values(2, 1, np.array([0.5 + 0.5j, -1.0 + 0j]))
    g = sz.load_function(sz.dump_function(f))
    assert np.allclose(g.values, f.values)


def test_certificate_round_trip():
    T = mf.MultilinearForm.from_entries(2, 2, 3, {(0, 0, 0): 1, (1, 1, 1): 1})
    cert = rk.prank_certificate_search(T)
    c2 = sz.load_certificate(sz.dump_certificate(cert), T)
    assert len(c2) == len(cert)
    assert rk.verify_certificate(c2).ok


def test_subspace_round_trip():
    rng = random.Random(4)
    for _ in range(10):
        U = random_subspace(rng, 3, 4)
        assert sz.load_subspace(sz.dump_subspace(U)) == U


def test_witness_bundle_round_trip():
    rng = random.Random(5)
    T = mf.random_form(rng, 2, 2, 3)
    bs = tuple(an.random_mu_p_function(rng, 2, 2) for _ in range(7))
    form, loaded = sz.load_witness_bundle(sz.dump_witness_bundle(T, bs))
    assert form == T
    for a, b in zip(bs, loaded):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_dump_is_deterministic():
    rng = random.Random(6)
    T = mf.random_form(rng, 3, 2, 3)
    assert sz.dump_form(T) == sz.dump_form(mf.MultilinearForm(3, 2, 3, T.coeffs.copy()))


def test_format_errors():
    with pytest.raises(sz.FormatError):
        sz.load_poly("2 2 1\nnope 1/2^1\n")
    with pytest.raises(sz.FormatError):
        sz.load_witness_bundle("[b1]\n2 1 exact m=1 den=1\n1\n1\n")
