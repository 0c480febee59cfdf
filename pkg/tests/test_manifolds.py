import json

import numpy as np
import pytest
import sympy as sp
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from akbrst.manifolds import (
    AmbientStructure,
    ManifoldError,
    build_compatible_triple,
    get_manifold,
    list_manifolds,
    load_config,
    nijenhuis_tensor,
    partial_derivative,
)

from .conftest import BUILTIN_NAMES, max_abs

X = sp.symbols("x y z t")
NIL_J = sp.Matrix([[0, X[0], -1, 0], [0, 0, 0, -1], [1, 0, 0, -X[0]], [0, 1, 0, 0]])


def _sym_nijenhuis(J, point):
    n = J.shape[0]
    sub = dict(zip(X, point))
    out = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                expr = sum(J[l, j] * sp.diff(J[i, k], X[l]) - J[l, k] * sp.diff(J[i, j], X[l])
                           - J[i, l] * (sp.diff(J[l, k], X[j]) - sp.diff(J[l, j], X[k])) for l in range(n))
                out[i, j, k] = float(expr.subs(sub))
    return out


def test_registry():
    assert list_manifolds() == sorted(BUILTIN_NAMES)
    with pytest.raises(ManifoldError):
        get_manifold("torus")


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_compatible_triple_invariants(ambients, name):
    amb = ambients[name]
    for x in amb.manifold.sample_points(5, seed=4):
        res = amb.invariant_residuals(x)
        assert res.pop("det_omega") > 1e-3  # nondegenerate
        assert max(res.values()) < 1e-12, res


def test_polar_decomposition_on_flat_aux_metric():
    omega = np.zeros((4, 4))
    omega[0, 2] = omega[1, 3] = 1.0
    omega -= omega.T
    J, g = build_compatible_triple(np.diag([4.0, 1, 1, 1]), omega)
    assert max_abs(J @ J + np.eye(4)) < 1e-12
    assert max_abs(g - g.T) < 1e-12
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_nijenhuis_pinned_value_at_origin(nil):
    oracle = _sym_nijenhuis(NIL_J, [0, 0, 0, 0])
    N = nijenhuis_tensor(nil.manifold, np.zeros(4))
    assert max_abs(N - oracle) < 1e-12
    assert max_abs(N) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
@settings(max_examples=8, deadline=None)
def test_nijenhuis_matches_symbolic_everywhere(pt):
    N = nijenhuis_tensor(get_manifold("nilmanifold"), np.array(pt))
    assert max_abs(N - _sym_nijenhuis(NIL_J, pt)) < 1e-11


@pytest.mark.parametrize("name", ["flat_kahler", "sphere"])
def test_integrable_builtins_have_zero_nijenhuis(ambients, name):
    for x in ambients[name].manifold.sample_points(10, seed=2):
        assert max_abs(nijenhuis_tensor(ambients[name].manifold, x)) < 1e-10


def test_partial_derivatives_against_sympy():
    g = sp.Matrix([[1, 0, 0, 0], [0, 1 + X[0] ** 2, -X[0], 0], [0, -X[0], 1, 0], [0, 0, 0, 1]])
    pt = [0.4, -0.3, 0.2, 0.7]
    sub = dict(zip(X, pt))
    man = get_manifold("nilmanifold")
    for order in (1, 2):
        got = partial_derivative(man, "g", pt, 0, order)
        want = np.array(sp.diff(g, X[0], order).subs(sub), dtype=float)
        assert max_abs(got - want) < 1e-13
    with pytest.raises(ManifoldError):
        partial_derivative(man, "g", pt, 0, 3)


def test_point_outside_chart_rejected(sphere):
    with pytest.raises(ManifoldError):
        sphere.manifold.check_point([0.0, 0.0])  # pole


@pytest.mark.parametrize("suffix", [".yaml", ".json"])
def test_config_round_trip(tmp_path, suffix):
    man = get_manifold("nilmanifold")
    path = tmp_path / f"nil{suffix}"
    data = man.to_dict()
    path.write_text(yaml.safe_dump(data) if suffix == ".yaml" else json.dumps(data))
    loaded = load_config(path)
    pt = np.array([0.2, 0.1, -0.4, 0.3])
    amb_a, amb_b = AmbientStructure(man), AmbientStructure(loaded)
    assert max_abs(amb_a.J(pt) - amb_b.J(pt)) == 0.0
    assert get_manifold(str(path)).name == man.name


def test_config_rejects_bad_shape(tmp_path):
    data = get_manifold("sphere").to_dict()
    first = next(iter(data["fields"]))
    data["fields"][first]["components"] = [["1"]]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(data))
    with pytest.raises(ManifoldError):
        load_config(path)
