import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akbrst.grassmann import GrassmannElement as G
from akbrst.grassmann import SuperArray, sprod
from akbrst.jets import get_basis

e = [G.generator(i) for i in range(6)]


def test_generators_square_to_zero():
    for g in e:
        assert g * g == G()


def test_anticommute():
    assert e[0] * e[1] == -(e[1] * e[0])


@pytest.mark.parametrize("lhs,rhs", [
    (e[0] * e[1] * (e[2] * e[3]), G({(0, 1, 2, 3): 1.0})),
    (e[0] * e[2] * (e[1] * e[3]), G({(0, 1, 2, 3): -1.0})),
    (G({(3, 1): 2.0}), G({(1, 3): -2.0})),
    (G({(2, 2): 5.0}), G()),
])
def test_reordering_signs(lhs, rhs):
    assert lhs == rhs


def test_left_and_right_derivatives():
    e12 = e[1] * e[2]
    assert e12.left_derivative(1) == e[2]
    assert e12.left_derivative(2) == -e[1]
    assert e12.right_derivative(2) == e[1]
    assert e12.right_derivative(1) == -e[2]


elements = st.dictionaries(
    st.lists(st.integers(0, 4), max_size=3, unique=True).map(tuple),
    st.floats(-2, 2, allow_nan=False, allow_infinity=False),
    max_size=4,
).map(G)


@given(elements, elements, elements)
@settings(max_examples=60, deadline=None)
def test_associative_and_distributive(a, b, c):
    assert ((a * b) * c).isclose(a * (b * c), 1e-9)
    assert (a * (b + c)).isclose(a * b + a * c, 1e-9)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=3, unique=True),
       st.lists(st.integers(0, 4), min_size=1, max_size=3, unique=True))
@settings(max_examples=60, deadline=None)
def test_graded_commutativity(x, y):
    a, b = G({tuple(x): 1.0}), G({tuple(y): 1.0})
    sign = (-1) ** (len(x) * len(y))
    assert a * b == sign * (b * a)


@given(elements, st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_left_derivative_leibniz(a, i):
    # d/de_i (e_j * a) = delta_ij a - e_j d/de_i a for odd e_j
    j = (i + 1) % 5
    lhs = (e[j] * a).left_derivative(i)
    rhs = (a if i == j else G()) - e[j] * a.left_derivative(i)
    assert lhs.isclose(rhs, 1e-9)


def test_superarray_product_matches_scalar_algebra():
    basis = get_basis(1, 0)
    gens = SuperArray.generators([0, 1, 2], basis)  # shape (3,)
    outer = sprod("a,b->ab", gens, gens)
    vals = outer.values()
    # e0 e1 = -e1 e0 and e_i e_i = 0
    assert vals[0b011][0, 1] == pytest.approx(1.0)
    assert vals[0b011][1, 0] == pytest.approx(-1.0)
    assert all(abs(v[k, k]) == 0 for v in vals.values() for k in range(3))


def test_superarray_right_derivative():
    basis = get_basis(1, 0)
    gens = SuperArray.generators([0, 1], basis)
    prod = sprod(",->", gens[0], gens[1])
    d1 = prod.odd_right_deriv(1)
    d0 = prod.odd_right_deriv(0)
    assert d1.values()[0b01] == pytest.approx(1.0)
    assert d0.values()[0b10] == pytest.approx(-1.0)
