import numpy as np
import pytest

from akbrst import brst
from akbrst.grassmann import sprod
from akbrst.phase_space import PhasePoint, point_context, project_pseudoholomorphic, sample_phase_points
from akbrst.superforms import apply_derivation

from .conftest import BUILTIN_NAMES


def _setup(amb, seed=3, k=0, kind="darboux"):
    pp = sample_phase_points(amb, k + 1, seed)[k]
    ctx = point_context(amb, pp.u, kind)
    return ctx, PhasePoint(pp.u, project_pseudoholomorphic(ctx, pp.p), pp.x)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_unrestricted_control(ambients, name):
    ctx, pp = _setup(ambients[name], seed=8)
    for label, r in brst.full_space_control(ctx, pp).items():
        assert r["delta_squared"] < 1e-10, label
        assert r["contraction_vs_derivation"] < 1e-10, label
        assert r["structural_strong"] < 1e-8, label


@pytest.mark.parametrize("name", ["sphere", "nilmanifold"])
def test_opposite_ghost_sign_is_not_nilpotent(ambients, name):
    ctx, pp = _setup(ambients[name], seed=3, k=1)
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    g2 = brst.GradedFull(ctx, pf, order=2, ghost_sign=-1.0)
    V = g2.derivation
    twice = [apply_derivation(g2.space, apply_derivation(g2.space, g2.observable(lab), V), V).truncate(0).max_abs()
             for lab in brst.BRST_LABELS]
    assert max(twice) > 0.1


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_ghost_grading(ambients, name):
    ctx, pp = _setup(ambients[name])
    gh = brst.ghost_number_check(ctx, pp)
    assert gh["wrong_ghost_number"] == 0 and gh["even_terms"] == 0
    assert gh["terms"] > 0


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_projected_derivation_is_odd_right_derivation(ambients, name):
    ctx, pp = _setup(ambients[name])
    assert brst.derivation_property_check(ctx, pp, seed=1) < 1e-10


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_graded_structural_equations(ambients, name):
    ctx, pp = _setup(ambients[name], seed=4)
    r = brst.graded_hamiltonian_fields(ctx, pp)
    for lab in ("u", "chi", "P"):
        assert r[lab]["strong"] < 1e-7
    assert r["P"]["closed_form"] < 1e-10
    assert r["J"]["weak"] < 1e-7


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_chi_and_ghost_momentum_relations(ambients, name):
    ctx, pp = _setup(ambients[name], seed=5)
    tr = brst.brst_transform(ctx, pp)
    assert tr["chi"]["contraction_vs_closed"] < 1e-7
    assert tr["P"]["contraction_vs_closed"] < 1e-7
    for lab in brst.BRST_LABELS:
        assert tr[lab]["structural_weak"] < 1e-7


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_u_transforms_into_minus_chi(ambients, name):
    # the nilpotent convention fixes delta u = -chi
    ctx, pp = _setup(ambients[name], seed=6)
    gs = brst._plus_space(ctx, pp)
    dc, strong, _ = gs.delta_contraction("u")
    assert strong < 1e-8
    assert (dc + gs.chi()).truncate(0).max_abs() < 1e-10


def test_sphere_current_relation_with_nilpotent_sign(sphere):
    for k in range(3):
        ctx, pp = _setup(sphere, seed=2, k=k)
        gs = brst._plus_space(ctx, pp)
        dc, _, _ = gs.delta_contraction("J")
        DC = gs.lift(ctx.DC)
        t1 = sprod("AD,Db->Ab", sprod("c,DAc->AD", gs.eta, gs.C), gs.p_plus)
        t2 = sprod("AD,Db->Ab", sprod("ADbc,bc->AD", DC, gs.etaeta), gs.P_plus)
        assert (dc - (t1 + t2.scale(0.5))).truncate(0).max_abs() < 1e-10


def test_sphere_projected_nilpotency(sphere):
    ctx, pp = _setup(sphere, seed=9)
    for lab, r in brst.nilpotency_check(ctx, pp).items():
        assert r["residual"] < 1e-6, lab


def test_flat_relations_agree_everywhere(flat):
    ctx, pp = _setup(flat, seed=1)
    tr = brst.brst_transform(ctx, pp)
    assert tr["J"]["contraction_vs_closed"] < 1e-12
    assert all(r["contraction_vs_derivation"] < 1e-12 for r in tr.values())


def test_current_is_odd(nil):
    ctx, pp = _setup(nil)
    U = brst.brst_current(ctx, pp)
    assert np.all(U.parities() == 1)
    assert np.all(brst.brst_current(ctx, pp, plus=False).parities() == 1)


def test_graded_projection_zeroes_mixed_blocks(nil):
    from akbrst.phase_space import check_pseudoholomorphic_vanishing

    rng = np.random.default_rng(0)
    pp = sample_phase_points(nil, 1, 4)[0]
    ctx = point_context(nil, pp.u, "darboux")
    gp = brst.graded_project(ctx, brst.GradedPhasePoint(pp, rng.normal(size=(4, 2))))
    assert check_pseudoholomorphic_vanishing(ctx, gp.base.p)["p_a^kappa*"] < 1e-10
    P_hol = np.linalg.solve(ctx.geo.E.value.T, gp.P)
    assert check_pseudoholomorphic_vanishing(ctx, P_hol)["p_a*^kappa"] < 1e-10


def test_witten_substitution_of_C(nil):
    for k in range(3):
        ctx, pp = _setup(nil, seed=7, k=k)
        r = brst.witten_form_check(ctx, pp)
        assert r["C_substitution"] < 1e-7
        assert r["P"] < 1e-6
