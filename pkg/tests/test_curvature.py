import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from akbrst.curvature import (
    anholonomic_connection,
    appendix2_identity_suite,
    cartan_structure_functions,
    christoffel,
    darboux_identity_check,
    local_geometry,
    riemann_tensor,
    structure_tensor,
)
from akbrst.curvature import ricci_identity_residual

from .conftest import BUILTIN_NAMES, max_abs

X = sp.symbols("x y z t")
NIL_G = sp.Matrix([[1, 0, 0, 0], [0, 1 + X[0] ** 2, -X[0], 0], [0, -X[0], 1, 0], [0, 0, 0, 1]])


def _sym_christoffel(g, point):
    gi = g.inv()
    n = g.shape[0]
    sub = dict(zip(X, point))
    out = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                expr = sum(gi[i, l] * (sp.diff(g[l, j], X[k]) + sp.diff(g[l, k], X[j]) - sp.diff(g[j, k], X[l]))
                           for l in range(n)) / 2
                out[i, j, k] = float(expr.subs(sub))
    return out


def test_nilmanifold_christoffel_pinned_at_origin(nil):
    got = christoffel(nil, np.zeros(4)).gamma_hol
    pinned = np.zeros((4, 4, 4))
    pinned[0, 1, 2] = pinned[0, 2, 1] = 0.5
    pinned[1, 0, 2] = pinned[1, 2, 0] = -0.5
    pinned[2, 0, 1] = pinned[2, 1, 0] = -0.5
    assert max_abs(_sym_christoffel(NIL_G, [0, 0, 0, 0]) - pinned) == 0.0
    assert max_abs(got - pinned) < 1e-14


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
@settings(max_examples=6, deadline=None)
def test_nilmanifold_christoffel_matches_symbolic(pt):
    from akbrst.manifolds import AmbientStructure, get_manifold

    amb = AmbientStructure(get_manifold("nilmanifold"))
    assert max_abs(christoffel(amb, np.array(pt)).gamma_hol - _sym_christoffel(NIL_G, pt)) < 1e-12


@pytest.mark.parametrize("theta", [0.4, 1.0, math.pi / 2, 2.5])
def test_sphere_hand_formulas(sphere, theta):
    pt = [theta, 0.7]
    gam = christoffel(sphere, pt).gamma_hol
    assert gam[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta), abs=1e-13)
    assert gam[1, 0, 1] == pytest.approx(1 / math.tan(theta), abs=1e-12)
    R = riemann_tensor(sphere, pt)
    assert max_abs(R.ricci - np.eye(2)) < 1e-12  # unit sphere: Ric = g
    assert R.R[0, 1, 0, 1] == pytest.approx(1.0, abs=1e-12)
    C = cartan_structure_functions(sphere, pt).C
    assert C[1, 0, 1] == pytest.approx(-1 / math.tan(theta), abs=1e-10)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
@pytest.mark.parametrize("kind", ["gram_schmidt", "unitary", "darboux", "synchronous"])
def test_cartan_routes_agree(ambients, name, kind):
    amb = ambients[name]
    for x in amb.manifold.sample_points(3, seed=11):
        assert cartan_structure_functions(amb, x, kind).crosscheck < 1e-8


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_metric_compatibility_in_frame(ambients, name):
    amb = ambients[name]
    for x in amb.manifold.sample_points(3, seed=5):
        G = anholonomic_connection(amb, x).gamma_anh  # G[A, B, C] = theta^A(nabla_B e_C)
        assert max_abs(G + G.transpose(2, 1, 0)) < 1e-8


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_riemann_symmetries(ambients, name):
    amb = ambients[name]
    x = amb.manifold.sample_points(1, seed=9)[0]
    R = riemann_tensor(amb, x)
    assert R.bianchi < 1e-10
    assert R.holonomic_agreement < 1e-10
    assert max_abs(R.R + R.R.transpose(0, 1, 3, 2)) < 1e-10


def test_ricci_identity_nilmanifold(nil):
    for x in nil.manifold.sample_points(5, seed=3):
        assert ricci_identity_residual(local_geometry(nil, x)) < 1e-7


def test_sphere_is_parallel(sphere):
    for x in sphere.manifold.sample_points(5, seed=3):
        assert max_abs(local_geometry(sphere, x, "darboux").DJ.value) < 1e-8


def test_synchronous_frame_kills_connection(nil):
    geo = local_geometry(nil, np.zeros(4), "synchronous")
    assert max_abs(geo.Gamma.value) < 1e-8


def test_sphere_darboux_frame_has_vanishing_C_at_point_only(sphere):
    geo = local_geometry(sphere, [math.pi / 4, 0.0], "darboux")
    assert max_abs(geo.C.value) < 1e-8
    assert max_abs(geo.C.deriv(0).value) > 0.1


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_darboux_frame_connection(ambients, name):
    amb = ambients[name]
    for x in amb.manifold.sample_points(5, seed=21):
        r = darboux_identity_check(amb, x)
        assert r["darboux-omega"] < 1e-12
        assert r["E3"] < 1e-7
        assert r["E4"] < 1e-7


def test_structure_tensor_weight_scales():
    from akbrst.jets import Jet, get_basis

    rng = np.random.default_rng(0)
    basis = get_basis(1, 0)
    J = Jet(rng.normal(size=(3, 3, 1)), basis)
    DJ = Jet(rng.normal(size=(3, 3, 3, 1)), basis)
    a = structure_tensor(J, DJ, 1.0).value
    b = structure_tensor(J, DJ, 0.5).value
    assert max_abs(a - 2 * b) < 1e-14
    assert max_abs(a + a.transpose(0, 2, 1)) < 1e-14


def test_appendix_sphere_control(sphere):
    r = appendix2_identity_suite(sphere, [1.1, 0.2])
    dj_sides = ["A1", "A3", "A4", "A5-first", "A5-last", "A6-10", "A11", "A12", "A13-DJ-part", "DJ-max"]
    assert max(r[k] for k in dj_sides) < 1e-8


def test_appendix_first_order_identities_nilmanifold(nil):
    for x in nil.manifold.sample_points(5, seed=8):
        r = appendix2_identity_suite(nil, x)
        assert max(r["A1"], r["A3"], r["A5-first"], r["ricci-identity"]) < 1e-7
