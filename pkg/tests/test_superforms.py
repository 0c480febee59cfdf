import numpy as np
import pytest

from akbrst.grassmann import SuperArray, sprod
from akbrst.superforms import (
    HORIZONTAL_M,
    SuperSpace,
    apply_derivation,
    contract_vector,
    d0,
    d1,
    solve_super_linear,
    sstack,
)


def _space(order=2):
    return SuperSpace.build([("x", 2, 0), ("th", 2, 1)], np.array([0.3, -0.7]), order)


def _sample_function(space):
    x = space.coordinates("x")
    th = space.coordinates("th")
    x0, x1 = x[0], x[1]
    # F = x0^2 x1 + x0 th0 th1 + 3 x1
    t1 = sprod(",->", sprod(",->", x0, x0), x1)
    t2 = sprod(",->", x0, sprod(",->", th[0], th[1]))
    return t1 + t2 + x1.scale(3.0)


def test_d_squared_vanishes():
    space = _space(order=2)
    F = _sample_function(space)
    ddF = d1(space, d0(space, F))
    assert ddF.truncate(0).max_abs() < 1e-13


def test_two_form_graded_antisymmetry():
    space = _space(order=2)
    a = d0(space, _sample_function(space))
    # multiply by an even function so d1 is nonzero
    x = space.coordinates("x")
    rho = d1(space, sprod("k,->k", a, x[0]))
    P = space.swap_sign()
    lhs = rho.transpose(1, 0)
    rhs = -rho.scale(P)
    assert (lhs - rhs).truncate(0).max_abs() < 1e-13


def test_gradient_of_coordinates_is_identity():
    space = _space(order=1)
    grads = sstack([d0(space, space.coordinates(g)[k]) for g in ("x", "th") for k in range(2)])
    vals = grads.truncate(0).values()[0]
    assert np.allclose(vals, np.eye(4))


def test_contraction_with_dx_dtheta():
    # rho = dx0 ^ dth0 with the coefficient-right convention: rho[0, 2] = 1, rho[2, 0] = -1
    space = _space(order=1)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 2], rho[2, 0] = 1.0, -1.0
    rho = space.scalar(rho)
    X = space.scalar(np.array([1.0, 0, 0, 0]))
    out = contract_vector(space, X, rho)
    assert out.truncate(0).values()[0].tolist() == [0, 0, 1, 0]


def test_right_derivation_property():
    space = _space(order=2)
    th = space.coordinates("th")
    x = space.coordinates("x")
    F = _sample_function(space)  # even
    G = sprod(",->", th[0], x[1])  # odd
    # odd vector field V = th1 d/dx0 + x0 d/dth0
    zero = SuperArray.zeros((), space.basis)
    V = sstack([th[1], zero, x[0], zero])
    lhs = apply_derivation(space, sprod(",->", F, G), V)
    rhs = sprod(",->", F, apply_derivation(space, G, V)) - sprod(",->", apply_derivation(space, F, V), G)
    assert (lhs - rhs).truncate(0).max_abs() < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_solver_recovers_known_coefficients(seed):
    rng = np.random.default_rng(seed)
    space = _space(order=0)
    th = space.coordinates("th")
    nb, rows = 3, 5
    G = space.scalar(rng.normal(size=(nb, rows)))
    c_even = space.scalar(rng.normal(size=nb))
    c_odd = sprod("j,->j", space.scalar(rng.normal(size=nb)), th[0])
    coeffs = c_even + c_odd
    parity = np.zeros(rows, int)
    rhs = sprod("j,jr->r", coeffs, G)
    sol = solve_super_linear(G, rhs, parity)
    assert sol.residual_strong < 1e-12
    assert (sol.coeffs - coeffs).max_abs() < 1e-10
    assert sol.rank == nb


def test_horizontal_contraction_matrix():
    # d/dx^1 contracted with dx_2 = +1 and d/dx^2 contracted with dx_1 = -1 for dx_alpha = d/dx^alpha contracted with d^2x
    assert HORIZONTAL_M[1, 0] == 1.0
    assert HORIZONTAL_M[0, 1] == -1.0
    assert np.trace(HORIZONTAL_M) == 0.0
