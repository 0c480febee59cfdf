import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akbrst.phase_space import (
    FramedMomenta,
    PhasePoint,
    PlusSpace,
    bracket_algebra_check,
    check_pseudoholomorphic_vanishing,
    constrained_momenta,
    hamiltonian_vector_field,
    leibniz_bracket,
    momentum_frame_conversion,
    momentum_observable,
    plus_bracket_check,
    plus_bracket_defect,
    plus_coordinates,
    point_context,
    project_pseudoholomorphic,
    pseudoholomorphic_residual,
    reconstruct_momenta,
    sample_phase_points,
    vertical_multisymplectic_form,
)

from .conftest import BUILTIN_NAMES, max_abs

momenta = st.lists(st.floats(-2, 2, allow_nan=False), min_size=8, max_size=8).map(
    lambda v: np.array(v).reshape(4, 2))


def _projected(ctx, pp):
    return PhasePoint(pp.u, project_pseudoholomorphic(ctx, pp.p), pp.x)


def test_sampling_is_seeded(nil):
    a = sample_phase_points(nil, 3, seed=7)
    b = sample_phase_points(nil, 3, seed=7)
    assert all(np.array_equal(x.p, y.p) and np.array_equal(x.u, y.u) for x, y in zip(a, b))
    assert PhasePoint.from_dict(a[0].to_dict()).p.tolist() == a[0].p.tolist()


@given(momenta)
@settings(max_examples=25, deadline=None)
def test_momentum_round_trip(p):
    from akbrst.manifolds import AmbientStructure, get_manifold

    amb = AmbientStructure(get_manifold("nilmanifold"))
    ctx = point_context(amb, [0.2, -0.1, 0.4, 0.3])
    fm = momentum_frame_conversion(ctx, p)
    assert max_abs(reconstruct_momenta(ctx, fm) - p) < 1e-10
    # hol and antihol blocks are conjugate for real momenta
    assert max_abs(fm.as_ks - np.conj(fm.a_k)) < 1e-12
    assert max_abs(momentum_observable(ctx, PhasePoint(ctx.point, p), 1).components - fm.p_frame[1]) < 1e-12


@given(momenta)
@settings(max_examples=25, deadline=None)
def test_projection_is_idempotent_and_constrained(p):
    from akbrst.manifolds import AmbientStructure, get_manifold

    amb = AmbientStructure(get_manifold("flat_kahler"))
    ctx = point_context(amb, [0.1, 0.2, 0.3, 0.4])
    once = project_pseudoholomorphic(ctx, p)
    assert max_abs(project_pseudoholomorphic(ctx, once) - once) < 1e-12
    assert pseudoholomorphic_residual(amb.J(ctx.point), ctx.surface.eps, once) < 1e-10


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_constraint_kills_mixed_blocks_only(ambients, name):
    amb = ambients[name]
    ctx = point_context(amb, amb.manifold.sample_points(1, seed=3)[0])
    basis = constrained_momenta(amb.J(ctx.point), ctx.surface.eps)
    assert basis.shape[0] == amb.dim  # half of the 2m momenta survive
    witness = basis.sum(axis=0)
    r = check_pseudoholomorphic_vanishing(ctx, witness)
    assert r["input"] < 1e-10
    assert max(r["p_a^kappa*"], r["p_a*^kappa"]) < 1e-10
    assert min(r["p_a^kappa"], r["p_a*^kappa*"]) > 1e-3


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_vertical_form_is_exact(ambients, name):
    amb = ambients[name]
    for pp in sample_phase_points(amb, 3, seed=2):
        assert vertical_multisymplectic_form(point_context(amb, pp.u), pp)["exactness"] < 1e-8


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_current_algebra_closes(ambients, name):
    amb = ambients[name]
    for pp in sample_phase_points(amb, 4, seed=6):
        r = bracket_algebra_check(point_context(amb, pp.u), pp)
        assert r["bracket"] < 1e-7
        assert r["antisymmetry"] < 1e-10
        assert r["structural"] < 1e-8
        if name == "flat_kahler":
            assert r["max_bracket"] == 0.0


def test_algebra_is_gauge_covariant(nil):
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    pp = sample_phase_points(nil, 1, seed=4)[0]
    assert bracket_algebra_check(point_context(nil, pp.u, regauge_Q=Q), pp)["bracket"] < 1e-7


def test_synchronous_frame_abelianises(nil):
    pp = sample_phase_points(nil, 1, seed=12)[0]
    ctx = point_context(nil, pp.u, "synchronous")
    for B in range(4):
        for C in range(4):
            assert max_abs(leibniz_bracket(ctx, pp, B, C)) < 1e-8


def test_hamiltonian_field_structural(nil):
    pp = sample_phase_points(nil, 1, seed=1)[0]
    ctx = point_context(nil, pp.u)
    for D in range(4):
        assert hamiltonian_vector_field(ctx, pp, D).residual < 1e-8


@pytest.mark.parametrize("name,kind", [("sphere", "darboux"), ("nilmanifold", "darboux"),
                                       ("nilmanifold", "gram_schmidt"), ("flat_kahler", "unitary")])
def test_induced_algebra_defect_formula(ambients, name, kind):
    # independent closed form for the defect of the induced algebra
    amb = ambients[name]
    for pp in sample_phase_points(amb, 3, seed=5):
        ctx = point_context(amb, pp.u, kind)
        r = plus_bracket_check(ctx, _projected(ctx, pp))
        assert r["defect_formula"] < 1e-8
        assert r["structural_weak"] < 1e-7


def test_defect_vanishes_on_kahler_darboux(sphere):
    for pp in sample_phase_points(sphere, 5, seed=9):
        ctx = point_context(sphere, pp.u, "darboux")
        q, qb = plus_coordinates(ctx, project_pseudoholomorphic(ctx, pp.p))
        assert max_abs(plus_bracket_defect(ctx, q, qb)) < 1e-10
        assert plus_bracket_check(ctx, _projected(ctx, pp))["bracket"] < 1e-7


def test_defect_nonzero_on_nilmanifold(nil):
    pp = sample_phase_points(nil, 1, seed=5)[0]
    ctx = point_context(nil, pp.u, "darboux")
    q, qb = plus_coordinates(ctx, project_pseudoholomorphic(ctx, pp.p))
    assert max_abs(plus_bracket_defect(ctx, q, qb)) > 1e-3


def test_plus_space_omega_connection_sign(ambients):
    amb = ambients["nilmanifold"]
    pp = sample_phase_points(amb, 1, seed=2)[0]
    ctx = point_context(amb, pp.u, "darboux")
    q, qb = plus_coordinates(ctx, project_pseudoholomorphic(ctx, pp.p))
    ps = PlusSpace(ctx, q, qb)
    num = ps.omega.truncate(0).coef.c[0, ..., 0]
    assert max_abs(num - ps.omega_displayed_connection(+1.0)) < 1e-10
    assert max_abs(num - ps.omega_displayed_connection(-1.0)) > 1e-3


def test_framed_momenta_mixed_norm():
    z = np.zeros(2)
    fm = FramedMomenta(np.zeros((4, 2)), z, np.array([0, 3.0]), np.array([-4.0, 0]), z)
    assert fm.mixed_norm() == 4.0
