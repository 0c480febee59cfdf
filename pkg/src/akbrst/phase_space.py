"""Covariant phase space of maps from a surface into an almost-Kaehler manifold.

Coordinates: base x^alpha (alpha = 0, 1), fields u^i, multimomenta p_i^alpha.
Frame momenta are p_A^alpha = E^i_A p_i^alpha.  The complex dictionary uses
the pseudoholomorphic vielbeins (a, a*) and the surface vielbeins
(kappa, kappa*).  Restricted ("plus") objects live on the subbundle where the
mixed blocks p_{a*}^kappa and p_a^{kappa*} vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curvature import LocalGeometry, frame_deriv, local_geometry
from .frames import GEOMETRY_ORDER, FrameSystem, build_frame_system
from .grassmann import SuperArray, sprod
from .jets import Jet, jeinsum
from .manifolds import AmbientStructure, SurfaceStructure, standard_surface
from .superforms import (
    SuperSpace,
    bivector_images,
    contract_bivector,
    contract_one_form,
    contract_vector,
    d0,
    d1,
    solve_super_linear,
)

__all__ = [
    "PhasePoint",
    "FramedMomenta",
    "FormObservable",
    "MultiVectorField",
    "PointContext",
    "point_context",
    "sample_phase_points",
    "momentum_observable",
    "momentum_frame_conversion",
    "reconstruct_momenta",
    "project_pseudoholomorphic",
    "pseudoholomorphic_residual",
    "check_pseudoholomorphic_vanishing",
    "constrained_momenta",
    "vertical_multisymplectic_form",
    "hamiltonian_vector_field",
    "leibniz_bracket",
    "bracket_algebra_check",
    "FullSpace",
    "PlusSpace",
    "StructuralEquationError",
    "plus_coordinates",
    "plus_bracket_check",
    "plus_bracket_defect",
]

STRUCTURAL_ABORT = 1e-6


class StructuralEquationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    u: np.ndarray
    p: np.ndarray  # p_i^alpha, shape (m, 2)
    x: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "u": self.u.tolist(), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PhasePoint":
        return cls(np.asarray(data["u"], float), np.asarray(data["p"], float), np.asarray(data.get("x", [0, 0]), float))


@dataclass(frozen=True)
class FramedMomenta:
    p_frame: np.ndarray  # p_A^alpha
    a_k: np.ndarray  # p_a^kappa
    as_k: np.ndarray  # p_{a*}^kappa
    a_ks: np.ndarray  # p_a^{kappa*}
    as_ks: np.ndarray  # p_{a*}^{kappa*}

    def mixed_norm(self) -> float:
        return float(max(np.abs(self.as_k).max(initial=0), np.abs(self.a_ks).max(initial=0)))


@dataclass(frozen=True)
class FormObservable:
    """Horizontal form with components indexed by alpha (degree 1) or a scalar (degree 0)."""

    label: str
    degree: int
    components: np.ndarray


@dataclass(frozen=True)
class MultiVectorField:
    """Vertical (and optionally horizontal) multivector in a phase-space patch.

    ``coeffs`` holds one superfunction per basis element listed in ``basis``;
    ``residual`` is the structural-equation residual on every equation.
    """

    label: str
    basis: tuple
    coeffs: SuperArray
    residual: float
    residual_weak: float = 0.0
    closed_form_gap: float | None = None


# ---------------------------------------------------------------------------
# per-point geometric context
# ---------------------------------------------------------------------------

@dataclass
class PointContext:
    ambient: AmbientStructure
    surface: SurfaceStructure
    geo: LocalGeometry
    frames: FrameSystem

    @property
    def m(self) -> int:
        return self.ambient.dim

    @property
    def h(self) -> int:
        return self.m // 2

    @property
    def point(self) -> np.ndarray:
        return self.geo.point

    @cached_property
    def thetaC(self) -> Jet:
        return frame_deriv(self.geo.C, self.geo.E)  # [A, D, B, C] = theta_A C^D_BC

    @cached_property
    def DC(self) -> Jet:
        return self.geo.covd(self.geo.C, "ull")  # [A, D, B, C] = D_A C^D_BC (tensor reading)

    @cached_property
    def pseudo_connection(self) -> Jet:
        """G[a, X, Y] = theta^a(nabla_{e_X} e_Y) with X, Y over (real A | hol b | antihol b*)."""
        comb = self.frames.comb
        m = self.m
        Gamma = self.geo.Gamma
        # frame vectors of all three families in real components: [B, X]
        eye = Jet.constant(np.eye(m, dtype=complex), comb.up_hol.basis)
        fam = _jconcat_cols([eye, comb.up_hol, comb.up_antihol])
        dfam = frame_deriv(fam, self.geo.E)  # [C, B, Y] = theta_C (e_Y)^B
        nab = jeinsum("CX,CBY->XBY", fam, dfam) + jeinsum("CX,BCD,DY->XBY", fam, Gamma, fam)
        return jeinsum("aB,XBY->aXY", comb.down_hol, nab)

    def holo_rows(self) -> np.ndarray:
        """Row transform du^i -> (theta^a, theta^{a*}) components: [new, i]."""
        ps = self.frames.pseudo
        return np.concatenate([ps.E_hol.value.T, ps.E_antihol.value.T])

    def eta_rows(self) -> np.ndarray:
        comb = self.frames.comb
        return np.concatenate([comb.up_hol.value.T, comb.up_antihol.value.T])

    def horizontal_rows(self) -> np.ndarray:
        s = self.frames.surf
        return np.stack([s.Einv_k, s.Einv_kbar])


def _jconcat_cols(items):
    from .jets import jconcat

    return jconcat(items, axis=1)


_CTX_CACHE: dict = {}


def point_context(ambient: AmbientStructure, point, kind: str = "gram_schmidt",
                  surface: SurfaceStructure | None = None, regauge_Q=None) -> PointContext:
    surface = surface or standard_surface()
    point = ambient.manifold.check_point(point)
    key = (ambient.manifold.name, id(ambient.manifold), tuple(point.tolist()), kind,
           None if regauge_Q is None else np.asarray(regauge_Q).tobytes(), surface.eps.tobytes())
    hit = _CTX_CACHE.get(key)
    if hit is not None:
        return hit
    geo = local_geometry(ambient, point, kind, GEOMETRY_ORDER, regauge_Q)
    frames = build_frame_system(ambient, surface, point, orth=geo.frame)
    ctx = PointContext(ambient, surface, geo, frames)
    if len(_CTX_CACHE) > 512:
        _CTX_CACHE.clear()
    _CTX_CACHE[key] = ctx
    return ctx


def sample_phase_points(ambient: AmbientStructure, n: int, seed: int) -> list[PhasePoint]:
    rng = np.random.default_rng(seed)
    us = ambient.manifold.sample_points(n, seed)
    m = ambient.dim
    return [PhasePoint(u, rng.uniform(-1.0, 1.0, size=(m, 2))) for u in us]


# ---------------------------------------------------------------------------
# numeric momentum dictionary
# ---------------------------------------------------------------------------

def momentum_observable(ctx: PointContext, pp: PhasePoint, A: int) -> FormObservable:
    pA = np.einsum("i,ib->b", ctx.geo.E.value[:, A], pp.p)
    return FormObservable(f"J_{A}", 1, pA)


def momentum_frame_conversion(ctx: PointContext, p: np.ndarray) -> FramedMomenta:
    ps, s = ctx.frames.pseudo, ctx.frames.surf
    Eh, Ea = ps.E_hol.value, ps.E_antihol.value
    blk = lambda E, k: np.einsum("ia,ib,b->a", E, p, k)  # noqa: E731
    return FramedMomenta(
        p_frame=np.einsum("iA,ib->Ab", ctx.geo.E.value, p),
        a_k=blk(Eh, s.Einv_k),
        as_k=blk(Ea, s.Einv_k),
        a_ks=blk(Eh, s.Einv_kbar),
        as_ks=blk(Ea, s.Einv_kbar),
    )


def reconstruct_momenta(ctx: PointContext, fm: FramedMomenta) -> np.ndarray:
    ps, s = ctx.frames.pseudo, ctx.frames.surf
    Ih, Ia = ps.Einv_hol.value, ps.Einv_antihol.value
    out = (np.einsum("ai,a,b->ib", Ih, fm.a_k, s.E_k) + np.einsum("ai,a,b->ib", Ia, fm.as_k, s.E_k)
           + np.einsum("ai,a,b->ib", Ih, fm.a_ks, s.E_kbar) + np.einsum("ai,a,b->ib", Ia, fm.as_ks, s.E_kbar))
    return out


def project_pseudoholomorphic(ctx: PointContext, p: np.ndarray) -> np.ndarray:
    fm = momentum_frame_conversion(ctx, p)
    z = np.zeros_like(fm.as_k)
    out = reconstruct_momenta(ctx, FramedMomenta(fm.p_frame, fm.a_k, z, z, fm.as_ks))
    return out.real if np.isrealobj(p) else out


def pseudoholomorphic_residual(J: np.ndarray, eps: np.ndarray, p: np.ndarray) -> float:
    """|J^i_j p_i^alpha - eps^alpha_beta p_j^beta|."""
    return float(np.max(np.abs(np.einsum("ij,ia->ja", J, p) - np.einsum("ab,jb->ja", eps, p)), initial=0.0))


def constrained_momenta(J: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Orthonormal basis of solutions of the pseudoholomorphicity condition, shape (k, m, 2)."""
    m = J.shape[0]
    op = np.kron(J.T, np.eye(2)) - np.kron(np.eye(m), eps)  # acting on p.ravel() (i-major)
    _, s, vt = np.linalg.svd(op)
    null = vt[np.sum(s > 1e-10):]
    return null.reshape(-1, m, 2)


def check_pseudoholomorphic_vanishing(ctx: PointContext, p: np.ndarray, input_tol: float = 1e-12) -> dict[str, float]:
    J = ctx.ambient.J(ctx.point)
    fm = momentum_frame_conversion(ctx, p)
    return {
        "input": pseudoholomorphic_residual(J, ctx.surface.eps, p),
        "p_a^kappa*": float(np.abs(fm.a_ks).max(initial=0.0)),
        "p_a*^kappa": float(np.abs(fm.as_k).max(initial=0.0)),
        "p_a^kappa": float(np.abs(fm.a_k).max(initial=0.0)),
        "p_a*^kappa*": float(np.abs(fm.as_ks).max(initial=0.0)),
    }


# ---------------------------------------------------------------------------
# full (unrestricted) ungraded space
# ---------------------------------------------------------------------------

class FullSpace:
    """Patch with coordinates (u^i, p_A^alpha); p is flattened A-major."""

    def __init__(self, ctx: PointContext, p_frame: np.ndarray, order: int = 1):
        self.ctx = ctx
        m = ctx.m
        self.space = SuperSpace.build([("u", m, 0), ("p", 2 * m, 0)],
                                      np.concatenate([ctx.point, p_frame.ravel()]).astype(complex), order)
        self.p_frame = p_frame

    @cached_property
    def p(self) -> SuperArray:
        return self.space.coordinates("p").reshape(self.ctx.m, 2)

    def lift(self, jet: Jet) -> SuperArray:
        return SuperArray.even(self.space.lift(jet, self.ctx.m))

    def theta(self) -> SuperArray:
        """Theta^V = p_A^alpha theta^A ^ dx_alpha as a 1-form [K, alpha]."""
        m = self.ctx.m
        Einv = self.lift(self.ctx.geo.Einv)  # [A, i]
        rows_u = sprod("ai,ab->ib", Einv, self.p)
        zero = SuperArray.zeros((2 * m, 2), rows_u.basis)
        return _cat_rows([rows_u, zero])

    def omega(self) -> SuperArray:
        return -d1(self.space, self.theta())

    def omega_closed_form(self) -> np.ndarray:
        """theta^A ^ dp_A ^ dx + 1/2 p_A C^A_BC theta^B theta^C dx, in coordinate components."""
        ctx, m = self.ctx, self.ctx.m
        N = self.space.dim
        Einv = ctx.geo.Einv.value
        C = ctx.geo.C.value
        out = np.zeros((N, N, 2), dtype=complex)
        for al in range(2):
            for A in range(m):
                k = m + 2 * A + al
                out[:m, k, al] += Einv[A]
                out[k, :m, al] -= Einv[A]
            out[:m, :m, al] += np.einsum("a,abc,bi,cj->ij", self.p_frame[:, al], C, Einv, Einv)
        return out

    def current(self) -> SuperArray:
        """J_A = p_A^alpha dx_alpha as an array [A, alpha] of functions."""
        return self.p

    def hamiltonian_field_closed(self, D: int) -> SuperArray:
        """theta_D + p_E^nu C^E_DG d/dp_G^nu."""
        ctx, m = self.ctx, self.ctx.m
        E = ctx.geo.E.value
        C = ctx.geo.C.value
        comp = np.zeros(self.space.dim, dtype=complex)
        comp[:m] = E[:, D]
        comp[m:] = np.einsum("en,eg->gn", self.p_frame, C[:, D, :]).ravel()
        return self.space.scalar(comp).truncate(0)


def _cat_rows(parts: list[SuperArray]) -> SuperArray:
    """Concatenate SuperArrays along the leading axis."""
    order = min(p.order for p in parts)
    parts = [p if p.order == order else p.truncate(order) for p in parts]
    basis = parts[0].basis
    sizes = [p.shape[0] for p in parts]
    rest = parts[0].shape[1:]
    total = sum(sizes)
    masks, coefs = [], []
    off = 0
    dtype = np.result_type(*[p.coef.dtype for p in parts], complex)
    for p, n in zip(parts, sizes):
        if p.nterms:
            c = np.zeros((p.nterms, total) + tuple(rest) + (basis.ncoef,), dtype=dtype)
            c[:, off:off + n] = p.coef.c
            masks.append(p.masks)
            coefs.append(c)
        off += n
    if not masks:
        return SuperArray.zeros((total,) + tuple(rest), basis, dtype)
    return SuperArray(np.concatenate(masks), Jet(np.concatenate(coefs), basis)).combine()


def vertical_multisymplectic_form(ctx: PointContext, pp: PhasePoint) -> dict:
    """Numeric -d(Theta) against the closed form, plus the coefficient blocks."""
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    fs = FullSpace(ctx, pf, order=1)
    num = fs.omega().truncate(0)
    num_v = num.coef.c[0, ..., 0] if num.nterms else 0.0
    closed = fs.omega_closed_form()
    return {
        "theta_dp": ctx.geo.Einv.value,
        "theta_theta": 0.5 * np.einsum("an,abc->nbc", pf, ctx.geo.C.value),
        "exactness": float(np.max(np.abs(num_v - closed))),
    }


def hamiltonian_vector_field(ctx: PointContext, pp: PhasePoint, D: int) -> MultiVectorField:
    """Closed-form field of J_D, validated against the numerically exact -d(Theta)."""
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    fs = FullSpace(ctx, pf, order=1)
    X = fs.hamiltonian_field_closed(D)
    Om = fs.omega().truncate(0)
    lhs = contract_vector(fs.space, X, Om)
    rhs = d0(fs.space, fs.current()[D]).truncate(0)
    res = (lhs - rhs).max_abs()
    if res > STRUCTURAL_ABORT:
        raise StructuralEquationError(f"structural equation residual {res:.3e} for J_{D}")
    return MultiVectorField(f"X[J_{D}]", tuple(fs.space.names), X, res)


def leibniz_bracket(ctx: PointContext, pp: PhasePoint, B: int, C: int) -> np.ndarray:
    """{J_B, J_C} = X[J_B] contracted with dV J_C, as alpha components."""
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    fs = FullSpace(ctx, pf, order=1)
    X = fs.hamiltonian_field_closed(B)
    dJ = d0(fs.space, fs.current()[C]).truncate(0)
    out = contract_one_form(X, dJ)
    return out.coef.c[0, ..., 0] if out.nterms else np.zeros(2)


def bracket_algebra_check(ctx: PointContext, pp: PhasePoint) -> dict[str, float]:
    """Max |{J_B, J_C} - C^A_BC J_A| and the antisymmetry defect, full space."""
    m = ctx.m
    pf = np.einsum("iA,ib->Ab", ctx.geo.E.value, pp.p)
    C = ctx.geo.C.value
    fs = FullSpace(ctx, pf, order=1)
    Om = fs.omega().truncate(0)
    dJ = d0(fs.space, fs.current()).truncate(0)  # [K, A, alpha]
    br = np.zeros((m, m, 2), dtype=complex)
    struct = 0.0
    for B in range(m):
        X = fs.hamiltonian_field_closed(B)
        struct = max(struct, (contract_vector(fs.space, X, Om) - dJ[:, B]).max_abs())
        val = contract_one_form(X, dJ)
        if val.nterms:
            br[B] = val.coef.c[0, ..., 0]
    target = np.einsum("abc,an->bcn", C, pf)
    return {
        "bracket": float(np.max(np.abs(br - target))),
        "antisymmetry": float(np.max(np.abs(br + br.transpose(1, 0, 2)))),
        "max_bracket": float(np.max(np.abs(br))),
        "structural": struct,
    }


# ---------------------------------------------------------------------------
# restricted (plus) space, ungraded and graded
# ---------------------------------------------------------------------------

class PlusSpace:
    """Patch of the pseudoholomorphic subbundle, optionally with ghosts.

    Even coordinates: u^i, q_a = p_a^kappa, qb_a = p_{a*}^{kappa*} (independent
    complex coordinates).  Odd coordinates when ``graded``: eta^A,
    Q_a = P_a^kappa, Qb_a = P_{a*}^{kappa*}.
    """

    def __init__(self, ctx: PointContext, q: np.ndarray, qb: np.ndarray, graded: bool = False, order: int = 1):
        self.ctx = ctx
        m, h = ctx.m, ctx.h
        layout = [("u", m, 0), ("q", h, 0), ("qb", h, 0)]
        if graded:
            layout += [("eta", m, 1), ("Q", h, 1), ("Qb", h, 1)]
        self.graded = graded
        self.space = SuperSpace.build(layout, np.concatenate([ctx.point, q, qb]).astype(complex), order)

    # elementary fields --------------------------------------------------------
    def lift(self, jet: Jet) -> SuperArray:
        return SuperArray.even(self.space.lift(jet, self.ctx.m))

    def coords(self, name: str) -> SuperArray:
        return self.space.coordinates(name)

    def _plus(self, hol: SuperArray, anti: SuperArray) -> SuperArray:
        comb, s = self.ctx.frames.comb, self.ctx.frames.surf
        Dh = self.lift(comb.down_hol)  # [a, A]
        Da = self.lift(comb.down_antihol)
        ek = self.space.scalar(s.E_k)
        ekb = self.space.scalar(s.E_kbar)
        t1 = sprod("b,n->bn", sprod("aA,a->A", Dh, hol), ek)
        t2 = sprod("b,n->bn", sprod("aA,a->A", Da, anti), ekb)
        return t1 + t2

    @cached_property
    def p_plus(self) -> SuperArray:
        """p_A^alpha|_+ = E^a_A q_a E^alpha_kappa + E^{a*}_A qb_a E^alpha_{kappa*}."""
        return self._plus(self.coords("q"), self.coords("qb"))

    @cached_property
    def P_plus(self) -> SuperArray:
        return self._plus(self.coords("Q"), self.coords("Qb"))

    @cached_property
    def eta(self) -> SuperArray:
        return self.coords("eta")

    def theta(self) -> SuperArray:
        h = self.ctx.h
        Einv = self.lift(self.ctx.geo.Einv)
        rows_u = sprod("ai,ab->ib", Einv, self.p_plus)
        parts = [rows_u, SuperArray.zeros((2 * h, 2), rows_u.basis)]
        if self.graded:
            parts += [-self.P_plus, SuperArray.zeros((2 * h, 2), rows_u.basis)]
        return _cat_rows(parts)

    @cached_property
    def omega(self) -> SuperArray:
        return -d1(self.space, self.theta())

    # row bookkeeping ------------------------------------------------------------
    def row_transform(self) -> np.ndarray:
        """Vertical rows: du -> (theta^a, theta^a*), d eta -> (d eta^a, d eta^a*), others unchanged."""
        N = self.space.dim
        T = np.eye(N, dtype=complex)
        g = self.space.groups
        iu = g["u"]
        T[np.ix_(iu, iu)] = self.ctx.holo_rows()
        if self.graded:
            ie = g["eta"]
            T[np.ix_(ie, ie)] = self.ctx.eta_rows()
        return T

    def ideal_rows(self) -> np.ndarray:
        """Boolean [row, kappa] marking theta^{a*} dx_kappa, theta^a dx_kappa*, and the d eta analogues."""
        N, h = self.space.dim, self.ctx.h
        mask = np.zeros((N, 2), bool)
        groups = ["u"] + (["eta"] if self.graded else [])
        for gname in groups:
            idx = self.space.groups[gname]
            mask[idx[h:], 0] = True
            mask[idx[:h], 1] = True
        return mask

    def transform_rows(self, sa: SuperArray, first_axis: int) -> SuperArray:
        """Apply the vertical and horizontal row changes to axes (first_axis, first_axis + 1)."""
        T = self.row_transform()
        H = self.ctx.horizontal_rows()
        c = sa.coef.c
        c = np.moveaxis(c, (1 + first_axis, 2 + first_axis), (-3, -2))
        c = np.einsum("...lbx,rl,kb->...rkx", c, T, H)
        c = np.moveaxis(c, (-3, -2), (1 + first_axis, 2 + first_axis))
        return SuperArray(sa.masks, Jet(c, sa.basis))

    # structural equations -------------------------------------------------------------
    def solve_vector_field(self, F: SuperArray, weak: bool = True):
        """Vector field X with X contracted with Omega = dF (F an alpha-component function pair)."""
        Om = self.omega.truncate(0)
        dF = d0(self.space, F).truncate(0)  # [L, alpha]
        G = self.transform_rows(Om, 1)
        rhs = self.transform_rows(dF, 0)
        keep = ~self.ideal_rows() if weak else None
        rp = self.space.parity.reshape(-1, 1)
        return solve_super_linear(G, rhs, rp, keep_rows=keep)

    def bivector_basis(self) -> list[tuple[np.ndarray, int]]:
        """(horizontal vector, vertical coordinate) pairs of the structural ansatz."""
        s = self.ctx.frames.surf
        g = self.space.groups
        out = []
        for k in g["q"]:
            out.append((s.E_kbar, int(k)))
        for k in g["qb"]:
            out.append((s.E_k, int(k)))
        if self.graded:
            for k in g["Q"]:
                out.append((s.E_kbar, int(k)))
            for k in g["Qb"]:
                out.append((s.E_k, int(k)))
        return out

    @cached_property
    def bivector_images(self) -> SuperArray:
        return bivector_images(self.space, self.omega.truncate(0), self.bivector_basis())

    def solve_bivector(self, F: SuperArray):
        rhs = d0(self.space, F).truncate(0)
        return solve_super_linear(self.bivector_images, rhs, self.space.parity)

    def contract_bivector(self, coeffs: SuperArray, form: SuperArray) -> SuperArray:
        return contract_bivector(self.space, coeffs, self.bivector_basis(), form.truncate(0))

    # displayed-form comparison pieces -----------------------------------------------------
    def omega_displayed_connection(self, sign: float = -1.0) -> np.ndarray:
        """Connection block -q_a Gamma^a_{C b} E^b_A theta^C theta^A dx_kappa (and the starred one), coordinate components."""
        ctx, m, h = self.ctx, self.ctx.m, self.ctx.h
        Gt = ctx.pseudo_connection.value  # [a, X, Y], X/Y: real (m) | hol (h) | antihol (h)
        comb = ctx.frames.comb
        Einv = ctx.geo.Einv.value  # theta^A_i
        q = self.space.point[m:m + h]
        qb = self.space.point[m + h:m + 2 * h]
        s = ctx.frames.surf
        Dh, Da = comb.down_hol.value, comb.down_antihol.value
        # omega^a_b E^b_A + omega^a_b* E^b*_A = Gamma^a_{C b} E^b_A + ... = (Gamma^a_{C, real A}) via completeness
        Gh = Gt[:, :m, m:m + h] @ Dh + Gt[:, :m, m + h:] @ Da  # [a, C, A] for the hol row family
        N = self.space.dim
        out = np.zeros((N, N, 2), dtype=complex)
        # the antiholomorphic family: conjugate frame, conjugate coefficients
        Gbar = np.conj(Gh)
        for al in range(2):
            blk = sign * (np.einsum("a,aCA->CA", q, Gh) * s.E_k[al] + np.einsum("a,aCA->CA", qb, Gbar) * s.E_kbar[al])
            anti = blk - blk.T  # theta^C ^ theta^A with coefficient blk (1/2 convention doubles)
            out[:m, :m, al] = Einv.T @ anti @ Einv
        # dq blocks
        ps = ctx.frames.pseudo
        Eh_low, Ea_low = ps.Einv_hol.value, ps.Einv_antihol.value  # theta^a_i
        for al in range(2):
            for a in range(h):
                kq = m + a
                kqb = m + h + a
                out[:m, kq, al] += Eh_low[a] * s.E_k[al]
                out[kq, :m, al] -= Eh_low[a] * s.E_k[al]
                out[:m, kqb, al] += Ea_low[a] * s.E_kbar[al]
                out[kqb, :m, al] -= Ea_low[a] * s.E_kbar[al]
        return out

    def closed_form_current_field(self, D: int) -> np.ndarray:
        """The displayed field of J_D|_+: theta_D plus the symmetrised/antisymmetrised Gamma blocks."""
        ctx, m, h = self.ctx, self.ctx.m, self.ctx.h
        Gt = ctx.pseudo_connection.value
        comb = ctx.frames.comb
        Uh, Ua = comb.up_hol.value, comb.up_antihol.value  # E^C_d
        Dh, Da = comb.down_hol.value, comb.down_antihol.value  # E^b_D
        q = self.space.point[m:m + h]
        qb = self.space.point[m + h:m + 2 * h]
        comp = np.zeros(self.space.dim, dtype=complex)
        comp[:m] = ctx.geo.E.value[:, D]
        # Gamma^a_{C Y} with C real and Y over hol/antihol, and Gamma^a_{Y C}
        def family(Y0, Y1):
            G_CY = Gt[:, :m, Y0:Y1]  # [a, C, b]
            G_YC = Gt[:, Y0:Y1, :m].transpose(0, 2, 1)  # [a, C, b]
            sym = 0.5 * (G_CY + G_YC)
            anti = 0.5 * (G_CY - G_YC)
            return sym + 2.0 * anti
        Kh = family(m, m + h)
        Ka = family(m + h, m + 2 * h)
        tot = np.einsum("aCb,b->aC", Kh, Dh[:, D]) + np.einsum("aCb,b->aC", Ka, Da[:, D])  # [a, C]
        comp[m:m + h] = np.einsum("a,aC,Cd->d", q, tot, Uh)
        comp[m + h:m + 2 * h] = np.einsum("a,aC,Cd->d", qb, np.conj(tot), Ua)
        return comp


def plus_coordinates(ctx: PointContext, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fm = momentum_frame_conversion(ctx, p)
    return fm.a_k, fm.as_ks


def plus_bracket_defect(ctx: PointContext, q: np.ndarray, qb: np.ndarray) -> np.ndarray:
    """Predicted {J_B, J_C}|_+ - C^A_BC J_A|_+ for the weakly solved fields, shape (B, C, alpha).

    -q_a theta^a([e_B, e_b*]) E^b*_C E_kappa plus the conjugate family.  It
    vanishes when the frame brackets [e_B, e_b*] have no holomorphic part.
    """
    m, h = ctx.m, ctx.h
    G = ctx.pseudo_connection.value
    comb, s = ctx.frames.comb, ctx.frames.surf
    lie = G[:, :m, m + h:] - G[:, m + h:, :m].transpose(0, 2, 1)  # theta^a([e_B, e_b*]) as [a, B, b]
    t = -np.einsum("a,aBb,bC->BC", q, lie, comb.down_antihol.value)
    tb = -np.einsum("a,aBb,bC->BC", qb, np.conj(lie), comb.down_hol.value)
    return t[..., None] * s.E_k + tb[..., None] * s.E_kbar


def plus_bracket_check(ctx: PointContext, pp: PhasePoint, weak: bool = True) -> dict[str, float]:
    """Induced current algebra on the subbundle with solved Hamiltonian fields."""
    m = ctx.m
    q, qb = plus_coordinates(ctx, pp.p)
    ps = PlusSpace(ctx, q, qb, graded=False, order=1)
    J = ps.p_plus  # [A, alpha]
    dJ = d0(ps.space, J).truncate(0)  # [K, A, alpha]
    C = ctx.geo.C.value
    br = np.zeros((m, m, 2), dtype=complex)
    strong = weak_res = gap = 0.0
    Om0 = ps.omega.truncate(0)
    for B in range(m):
        sol = ps.solve_vector_field(J[B], weak=weak)
        strong = max(strong, sol.residual_strong)
        weak_res = max(weak_res, sol.residual_weak)
        X = sol.coeffs
        val = contract_one_form(X, dJ)
        if val.nterms:
            br[B] = val.coef.c[0, ..., 0]
        closed = ps.space.scalar(ps.closed_form_current_field(B)).truncate(0)
        res_closed = (contract_vector(ps.space, closed, Om0) - dJ[:, B]).max_abs()
        gap = max(gap, res_closed)
    Jv = J.truncate(0).coef.c[0, ..., 0]
    target = np.einsum("abc,an->bcn", C, Jv)
    predicted = plus_bracket_defect(ctx, q, qb)
    return {
        "bracket": float(np.max(np.abs(br - target))),
        "defect_formula": float(np.max(np.abs(br - target - predicted))),
        "antisymmetry": float(np.max(np.abs(br + br.transpose(1, 0, 2)))),
        "structural_strong": strong,
        "structural_weak": weak_res,
        "closed_form_structural": gap,
    }
