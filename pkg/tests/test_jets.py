import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from akbrst import jets
from akbrst.jets import Jet, get_basis, jeinsum

finite = st.floats(-1.5, 1.5, allow_nan=False)


def _vars(point, order=2):
    return Jet.variables(np.asarray(point, float), get_basis(len(point), order))


def test_basis_size_matches_binomial():
    for n, k in [(1, 3), (2, 2), (4, 3)]:
        assert get_basis(n, k).ncoef == math.comb(n + k, k)


@given(finite, finite)
@settings(max_examples=40, deadline=None)
def test_product_rule_against_sympy(a, b):
    x, y = sp.symbols("x y")
    f = sp.sin(x) * sp.exp(y) + x**2 * y
    X = _vars([a, b])
    F = jets.sin(X[0]) * jets.exp(X[1]) + X[0] ** 2 * X[1]
    sub = {x: a, y: b}
    assert F.value == pytest.approx(float(f.subs(sub)), abs=1e-12)
    assert F.deriv(0).value == pytest.approx(float(sp.diff(f, x).subs(sub)), abs=1e-12)
    assert F.deriv(0).deriv(1).value == pytest.approx(float(sp.diff(f, x, y).subs(sub)), abs=1e-12)
    assert F.deriv(1).deriv(1).value == pytest.approx(float(sp.diff(f, y, 2).subs(sub)), abs=1e-12)


@pytest.mark.parametrize("fn,sym", [
    (jets.cos, sp.cos),
    (jets.exp, sp.exp),
    (lambda u: jets.log(u + 3.0), lambda u: sp.log(u + 3)),
    (lambda u: jets.sqrt(u + 2.0), lambda u: sp.sqrt(u + 2)),
    (lambda u: jets.power(u + 2.0, -1.5), lambda u: (u + 2) ** sp.Rational(-3, 2)),
])
def test_elementary_second_derivative(fn, sym):
    u = sp.symbols("u")
    x0 = 0.37
    F = fn(_vars([x0], order=3)[0])
    for k in range(4):
        want = float(sp.diff(sym(u), u, k).subs(u, x0))
        got = F
        for _ in range(k):
            got = got.deriv(0)
        assert got.value == pytest.approx(want, rel=1e-11, abs=1e-12)


def test_truncation_drops_high_orders():
    X = _vars([0.5, -0.2], order=3)
    F = (X[0] * X[1]) ** 2
    assert F.truncate(1).order == 1
    assert F.truncate(1).deriv(0).value == pytest.approx(F.deriv(0).value)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_jinv_is_inverse(seed):
    rng = np.random.default_rng(seed)
    X = _vars(rng.normal(size=3))
    A = jets.jarray([[1.0 + X[0] ** 2, X[1], 0.0], [X[1], 2.0, X[2]], [0.0, X[2], 3.0 + X[0]]])
    eye = jets.jmatmul(A, jets.jinv(A))
    assert np.abs(eye.value - np.eye(3)).max() < 1e-12
    for v in range(3):
        assert np.abs(eye.deriv(v).value).max() < 1e-11


def test_jeinsum_matches_elementwise_products():
    rng = np.random.default_rng(3)
    X = _vars(rng.normal(size=2))
    A = jets.jarray([[X[0], X[1]], [X[0] * X[1], 1.0]])
    B = jets.jarray([[jets.sin(X[0]), 2.0], [X[1] ** 2, X[0]]])
    C = jeinsum("ij,jk->ik", A, B)
    for i in range(2):
        for k in range(2):
            direct = A[i, 0] * B[0, k] + A[i, 1] * B[1, k]
            assert np.allclose(C[i, k].c, direct.c, atol=1e-14)


def test_jeinsum_requires_output():
    X = _vars([0.1, 0.2])
    with pytest.raises(ValueError):
        jeinsum("ij,jk", X, X)
