"""Graded phase space with ghosts, the BRST current and the BRST transformation.

Two independent routes compute the transformation of an observable F:

* contraction: solve the structural equation X[F] contracted with Omega = dF
  (vector fields for horizontal 1-forms, bivectors d/dx^h ^ d/dz^K for
  0-forms) and contract X[F] with dUpsilon;
* derivation: an explicit odd right derivation V on the coordinates.

Both are compared per Grassmann monomial with the closed forms.  A full
(unrestricted) graded space serves as a control where all structural
equations are solvable exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curvature import structure_tensor
from .grassmann import SuperArray, sprod
from .phase_space import (
    PhasePoint,
    PlusSpace,
    PointContext,
    _cat_rows,
    momentum_frame_conversion,
)
from .superforms import (
    SuperSpace,
    apply_derivation,
    bivector_images,
    contract_bivector,
    contract_one_form,
    d0,
    d1,
    solve_super_linear,
)

__all__ = [
    "GradedPhasePoint",
    "graded_project",
    "GradedPlus",
    "GradedFull",
    "brst_current",
    "ghost_number_check",
    "graded_hamiltonian_fields",
    "brst_transform",
    "nilpotency_check",
    "witten_form_check",
    "derivation_property_check",
    "BRST_LABELS",
]

BRST_LABELS = ("u", "chi", "P", "J")
# sign s of the ghost term in Upsilon = eta^A J_A + s/2 C eta eta P; +1 is the
# only choice whose contraction derivation squares to zero
GHOST_SIGN = 1.0


@dataclass(frozen=True)
class GradedPhasePoint:
    """Numeric part of a graded point; ghosts stay symbolic."""

    base: PhasePoint
    P: np.ndarray  # ghost multimomenta P_A^alpha coefficients in the real frame (m, 2)


def graded_project(ctx: PointContext, gp: GradedPhasePoint) -> GradedPhasePoint:
    """Zero the mixed blocks of both p and the ghost multimomenta."""
    from .phase_space import project_pseudoholomorphic

    p = project_pseudoholomorphic(ctx, gp.base.p)
    E = ctx.geo.E.value
    P_hol = np.linalg.solve(E.T, gp.P) if gp.P.size else gp.P  # P_i^alpha from P_A^alpha = E^i_A P_i^alpha
    P_proj = project_pseudoholomorphic(ctx, P_hol)
    return GradedPhasePoint(PhasePoint(gp.base.u, p, gp.base.x), E.T @ P_proj)


# ---------------------------------------------------------------------------
# restricted graded space
# ---------------------------------------------------------------------------

class GradedPlus(PlusSpace):
    """Restricted graded patch with the BRST current and the projected derivation."""

    def __init__(self, ctx: PointContext, q, qb, order: int = 1, ghost_sign: float = GHOST_SIGN):
        super().__init__(ctx, q, qb, graded=True, order=order)
        self.ghost_sign = ghost_sign

    @cached_property
    def C(self) -> SuperArray:
        return self.lift(self.ctx.geo.C)

    @cached_property
    def E(self) -> SuperArray:
        return self.lift(self.ctx.geo.E)

    @cached_property
    def etaeta(self) -> SuperArray:
        return sprod("b,c->bc", self.eta, self.eta)

    def upsilon(self) -> SuperArray:
        t1 = sprod("a,ab->b", self.eta, self.p_plus)
        t2 = sprod("a,ab->b", sprod("abc,bc->a", self.C, self.etaeta), self.P_plus)
        return t1 + t2.scale(0.5 * self.ghost_sign)

    def chi(self) -> SuperArray:
        return sprod("ia,a->i", self.E, self.eta)

    def observable(self, label: str) -> SuperArray:
        return {"u": self.coords("u"), "chi": self.chi(), "P": self.P_plus, "J": self.p_plus}[label]

    # closed forms -------------------------------------------------------------
    def closed_forms(self, dc_variant: str = "covariant") -> dict[str, SuperArray]:
        m = self.ctx.m
        C = self.C
        chi = self.chi()
        zero = SuperArray.zeros((m,), chi.basis)
        cP = sprod("Ab,bc->Ac", sprod("BAc,c->AB", C, self.eta), self.P_plus)
        c_form = -(self.p_plus + cP)
        DC = self.ctx.DC if dc_variant == "covariant" else self.ctx.thetaC
        d_form = self._d_form(self.lift(DC))
        return {"u": chi, "chi": zero, "P": c_form, "J": d_form}

    def _d_form(self, DC: SuperArray, C: SuperArray | None = None) -> SuperArray:
        C = self.C if C is None else C
        t1 = sprod("AD,Db->Ab", sprod("c,DAc->AD", self.eta, C), self.p_plus)
        t2 = sprod("AD,Db->Ab", sprod("ADbc,bc->AD", DC, self.etaeta), self.P_plus)
        return t1 - t2.scale(0.5)

    # derivation route -------------------------------------------------------------
    def full_components(self) -> dict[str, SuperArray]:
        """Full-space derivation components evaluated on the restricted fields."""
        return _derivation_components(self.C, self.lift(self.ctx.thetaC), self.eta, self.p_plus, self.P_plus,
                                      self.chi(), self.ghost_sign)

    @cached_property
    def derivation(self) -> SuperArray:
        """Projected derivation V_+ on (u, q, qb, eta, Q, Qb)."""
        comb, s = self.ctx.frames.comb, self.ctx.frames.surf
        V = self.full_components()
        m = self.ctx.m
        parts = {"u": V["u"], "eta": V["eta"]}
        for up, kvec, name, NAME in ((comb.up_hol, s.Einv_k, "q", "Q"), (comb.up_antihol, s.Einv_kbar, "qb", "Qb")):
            U = self.lift(up)  # [A, a]
            dU = _stack([U.even_deriv(i) for i in range(m)])  # [i, A, a]
            k = self.space.scalar(kvec)
            pk = sprod("Ab,b->A", self.p_plus, k)
            Pk = sprod("Ab,b->A", self.P_plus, k)
            parts[name] = (sprod("ia,i->a", sprod("iAa,A->ia", dU, pk), V["u"])
                           + sprod("Aa,A->a", U, sprod("Ab,b->A", V["p"], k)))
            parts[NAME] = (sprod("ia,i->a", sprod("iAa,A->ia", dU, Pk), V["u"])
                           + sprod("Aa,A->a", U, sprod("Ab,b->A", V["P"], k)))
        order = ["u", "q", "qb", "eta", "Q", "Qb"]
        return _cat_rows([parts[g] for g in order])

    def delta_derivation(self, F: SuperArray) -> SuperArray:
        return apply_derivation(self.space, F, self.derivation)

    # contraction route ----------------------------------------------------------------
    def delta_contraction(self, label: str, weak: bool = True):
        """Returns (delta_c[F] at the base point, structural residual strong, weak)."""
        F = self.observable(label)
        dU = d0(self.space, self.upsilon()).truncate(0)  # [K, alpha]
        if label in ("u", "chi"):
            out, strong = [], 0.0
            for i in range(F.shape[0]):
                sol = self.solve_bivector(F[i])
                strong = max(strong, sol.residual_strong)
                out.append(self.contract_bivector(sol.coeffs, dU))
            return _stack(out), strong, strong
        out, strong, wk = [], 0.0, 0.0
        for A in range(F.shape[0]):
            sol = self.solve_vector_field(F[A], weak=weak)
            strong = max(strong, sol.residual_strong)
            wk = max(wk, sol.residual_weak)
            out.append(contract_one_form(sol.coeffs, dU))
        return _stack(out), strong, wk


def _derivation_components(C, thC, eta, p, P, chi, s: float) -> dict[str, SuperArray]:
    """Odd right derivation generated by Upsilon with ghost-term sign ``s``."""
    ee = sprod("b,c->bc", eta, eta)
    Veta = sprod("abc,bc->a", C, ee).scale(-0.5 * s)
    Vp = (sprod("AD,Db->Ab", sprod("c,DAc->AD", eta, C), p)
          + sprod("AD,Db->Ab", sprod("ADbc,bc->AD", thC, ee), P).scale(0.5 * s))
    VP = -p + sprod("AB,Bb->Ab", sprod("BAc,c->AB", C, eta), P).scale(-s)
    return {"u": -chi, "eta": Veta, "p": Vp, "P": VP}


def _stack(items):
    from .superforms import sstack

    return sstack(items)


# ---------------------------------------------------------------------------
# full graded control space
# ---------------------------------------------------------------------------

class GradedFull:
    """Unrestricted graded patch (u, p_A^alpha, eta, P_A^alpha); p and P flattened A-major."""

    def __init__(self, ctx: PointContext, p_frame: np.ndarray, order: int = 1, ghost_sign: float = GHOST_SIGN):
        self.ctx = ctx
        self.ghost_sign = ghost_sign
        m = ctx.m
        layout = [("u", m, 0), ("p", 2 * m, 0), ("eta", m, 1), ("P", 2 * m, 1)]
        self.space = SuperSpace.build(layout, np.concatenate([ctx.point, p_frame.ravel()]).astype(complex), order)

    def lift(self, jet) -> SuperArray:
        return SuperArray.even(self.space.lift(jet, self.ctx.m))

    @cached_property
    def p(self):
        return self.space.coordinates("p").reshape(self.ctx.m, 2)

    @cached_property
    def P(self):
        return self.space.coordinates("P").reshape(self.ctx.m, 2)

    @cached_property
    def eta(self):
        return self.space.coordinates("eta")

    @cached_property
    def C(self):
        return self.lift(self.ctx.geo.C)

    def theta(self) -> SuperArray:
        m = self.ctx.m
        rows_u = sprod("ai,ab->ib", self.lift(self.ctx.geo.Einv), self.p)
        z = SuperArray.zeros((2 * m, 2), rows_u.basis)
        return _cat_rows([rows_u, z, -self.P, z])

    @cached_property
    def omega(self) -> SuperArray:
        return -d1(self.space, self.theta())

    def upsilon(self) -> SuperArray:
        ee = sprod("b,c->bc", self.eta, self.eta)
        t2 = sprod("a,ab->b", sprod("abc,bc->a", self.C, ee), self.P)
        return sprod("a,ab->b", self.eta, self.p) + t2.scale(0.5 * self.ghost_sign)

    def chi(self) -> SuperArray:
        return sprod("ia,a->i", self.lift(self.ctx.geo.E), self.eta)

    def observable(self, label: str) -> SuperArray:
        return {"u": self.space.coordinates("u"), "chi": self.chi(), "P": self.P, "J": self.p}[label]

    @cached_property
    def derivation(self) -> SuperArray:
        m = self.ctx.m
        V = _derivation_components(self.C, self.lift(self.ctx.thetaC), self.eta, self.p, self.P, self.chi(), self.ghost_sign)
        return _cat_rows([V["u"], V["p"].reshape(2 * m), V["eta"], V["P"].reshape(2 * m)])

    def bivector_basis(self) -> list:
        g = self.space.groups
        out = []
        for beta in range(2):
            hv = np.eye(2)[beta]
            for K in list(g["p"]) + list(g["P"]):
                out.append((hv, int(K)))
        return out

    def delta_contraction(self, label: str):
        F = self.observable(label)
        dU = d0(self.space, self.upsilon()).truncate(0)
        Om = self.omega.truncate(0)
        rp = self.space.parity.reshape(-1, 1)
        out, strong = [], 0.0
        if label in ("u", "chi"):
            basis = self.bivector_basis()
            G = bivector_images(self.space, Om, basis)
            for i in range(F.shape[0]):
                sol = solve_super_linear(G, d0(self.space, F[i]).truncate(0), self.space.parity)
                strong = max(strong, sol.residual_strong)
                out.append(contract_bivector(self.space, sol.coeffs, basis, dU))
        else:
            for A in range(F.shape[0]):
                sol = solve_super_linear(Om, d0(self.space, F[A]).truncate(0), rp)
                strong = max(strong, sol.residual_strong)
                out.append(contract_one_form(sol.coeffs, dU))
        return _stack(out), strong


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _plus_space(ctx: PointContext, pp: PhasePoint, order: int = 1) -> GradedPlus:
    fm = momentum_frame_conversion(ctx, pp.p)
    return GradedPlus(ctx, fm.a_k, fm.as_ks, order=order)


def _gap(a: SuperArray, b: SuperArray) -> float:
    return (a.truncate(0) - b.truncate(0)).max_abs()


def brst_current(ctx: PointContext, pp: PhasePoint, plus: bool = True) -> SuperArray:
    """Upsilon (or Upsilon|_+) as alpha components, Grassmann-odd."""
    if plus:
        return _plus_space(ctx, pp).upsilon()
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    return GradedFull(ctx, pf).upsilon()


def ghost_number_check(ctx: PointContext, pp: PhasePoint) -> dict[str, float]:
    """Every monomial of Upsilon|_+ has ghost number +1 and odd parity."""
    gs = _plus_space(ctx, pp)
    U = gs.upsilon()
    sp = gs.space
    eta_bits = [int(sp.slot[k]) for k in sp.groups["eta"]]
    anti_bits = [int(sp.slot[k]) for k in list(sp.groups["Q"]) + list(sp.groups["Qb"])]
    bad = 0
    for mask in U.masks:
        gn = sum((int(mask) >> b) & 1 for b in eta_bits) - sum((int(mask) >> b) & 1 for b in anti_bits)
        bad += gn != 1
    return {"wrong_ghost_number": float(bad), "even_terms": float(np.sum(U.parities() == 0)), "terms": float(U.nterms)}


def graded_hamiltonian_fields(ctx: PointContext, pp: PhasePoint, weak: bool = True) -> dict[str, dict[str, float]]:
    """Solve the structural equations on the restricted graded space and compare with displayed fields."""
    gs = _plus_space(ctx, pp)
    out: dict[str, dict[str, float]] = {}
    for label in BRST_LABELS:
        F = gs.observable(label)
        strong = wk = 0.0
        for idx in range(F.shape[0]):
            sol = gs.solve_bivector(F[idx]) if label in ("u", "chi") else gs.solve_vector_field(F[idx], weak=weak)
            strong = max(strong, sol.residual_strong)
            wk = max(wk, sol.residual_weak)
        out[label] = {"strong": strong, "weak": wk}
    # X[P_A] = -d/d eta^A: its contraction with Omega against dP_A
    from .superforms import contract_vector

    Om = gs.omega.truncate(0)
    dP = d0(gs.space, gs.P_plus).truncate(0)
    res = 0.0
    for A in range(ctx.m):
        comp = np.zeros(gs.space.dim, dtype=complex)
        comp[gs.space.groups["eta"][A]] = -1.0
        X = gs.space.scalar(comp).truncate(0)
        res = max(res, (contract_vector(gs.space, X, Om) - dP[:, A]).max_abs())
    out["P"]["closed_form"] = res
    return out


def brst_transform(ctx: PointContext, pp: PhasePoint, weak: bool = True) -> dict[str, dict[str, float]]:
    """Per relation: contraction vs closed form, derivation vs closed form, contraction vs derivation."""
    gs = _plus_space(ctx, pp, order=1)
    closed = gs.closed_forms("covariant")
    closed_theta = gs.closed_forms("frame")
    out = {}
    for label in BRST_LABELS:
        dc, strong, wk = gs.delta_contraction(label, weak=weak)
        dv = gs.delta_derivation(gs.observable(label))
        out[label] = {
            "contraction_vs_closed": _gap(dc, closed[label]),
            "derivation_vs_closed": _gap(dv, closed[label]),
            "contraction_vs_derivation": _gap(dc, dv),
            "contraction_vs_closed_frame_derivative": _gap(dc, closed_theta[label]),
            "structural_strong": strong,
            "structural_weak": wk,
        }
    return out


def full_space_control(ctx: PointContext, pp: PhasePoint) -> dict[str, dict[str, float]]:
    """Unrestricted graded space: contraction vs derivation and delta^2."""
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    gf = GradedFull(ctx, pf, order=1)
    out = {}
    for label in BRST_LABELS:
        dc, strong = gf.delta_contraction(label)
        dv = apply_derivation(gf.space, gf.observable(label), gf.derivation)
        out[label] = {"contraction_vs_derivation": _gap(dc, dv), "structural_strong": strong}
    g2 = GradedFull(ctx, pf, order=2)
    V = g2.derivation
    for label in BRST_LABELS:
        once = apply_derivation(g2.space, g2.observable(label), V)
        twice = apply_derivation(g2.space, once, V)
        out[label]["delta_squared"] = twice.truncate(0).max_abs()
    return out


def nilpotency_check(ctx: PointContext, pp: PhasePoint) -> dict[str, dict]:
    """delta^2 with the projected derivation on u, chi, P|_+ and J|_+."""
    gs = _plus_space(ctx, pp, order=2)
    V = gs.derivation
    out = {}
    for label in BRST_LABELS:
        once = apply_derivation(gs.space, gs.observable(label), V)
        twice = apply_derivation(gs.space, once, V).truncate(0)
        mono, _ = twice.worst_monomial()
        out[label] = {"residual": twice.max_abs(), "worst_monomial": int(mono)}
    return out


def _a13_rhs(ctx: PointContext) -> np.ndarray:
    """[A, D, B, C]: (D_A J^D_F)(D_B J_C^F) + J^D_F R_AB^F_K J_C^K + J^D_F R_CB J^F_A, literal index reading."""
    geo = ctx.geo
    J0, DJ0 = geo.J.value, geo.DJ.value
    R = geo.riemann().value
    Ric = np.einsum("ABAD->BD", R)
    rhs = (np.einsum("ADF,BCF->ABCD", DJ0, DJ0)
           + np.einsum("DF,FKAB,CK->ABCD", J0, R, J0)
           + np.einsum("DF,CB,FA->ABCD", J0, Ric, J0))
    return rhs.transpose(0, 3, 1, 2)


def witten_form_check(ctx: PointContext, pp: PhasePoint) -> dict[str, float]:
    """Closed BRST forms against their Darboux-substituted rewriting, per monomial."""
    gs = _plus_space(ctx, pp, order=1)
    closed = gs.closed_forms("covariant")
    geo = ctx.geo
    Cw = gs.lift(structure_tensor(geo.J, geo.DJ, 1.0))
    cP = sprod("Ab,bc->Ac", sprod("BAc,c->AB", Cw, gs.eta), gs.P_plus)
    c_w = -(gs.p_plus + cP)
    DCw = gs.space.scalar(0.5 * _a13_rhs(ctx))  # the quarter factor is 1/2 of the 1/2 in front
    d_w = gs._d_form(DCw, C=Cw)
    return {
        "u": 0.0,  # no structure functions appear in the u and chi relations
        "chi": 0.0,
        "P": _gap(c_w, closed["P"]),
        "J": _gap(d_w, closed["J"]),
        "C_substitution": float(np.max(np.abs(structure_tensor(geo.J, geo.DJ).value - geo.C.value))),
    }


def derivation_property_check(ctx: PointContext, pp: PhasePoint, seed: int = 0) -> float:
    """delta(FG) - F (delta G) - (-1)^|G| (delta F) G on products of generators (right derivation)."""
    gs = _plus_space(ctx, pp, order=2)
    V = gs.derivation
    rng = np.random.default_rng(seed)
    gens = [gs.observable("u")[0], gs.chi()[0], gs.P_plus[0, 0], gs.p_plus[1, 1], gs.eta[1]]
    worst = 0.0
    for _ in range(6):
        i, j = rng.integers(0, len(gens), size=2)
        F, G = gens[i], gens[j]
        lhs = apply_derivation(gs.space, sprod(",->", F, G), V)
        dF = apply_derivation(gs.space, F, V)
        dG = apply_derivation(gs.space, G, V)
        pG = int(G.parities().max(initial=0))
        rhs = sprod(",->", F, dG) + sprod(",->", dF, G).scale((-1.0) ** pG)
        worst = max(worst, (lhs.truncate(0) - rhs.truncate(0)).max_abs())
    return worst
