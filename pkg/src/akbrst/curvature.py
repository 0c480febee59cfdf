"""Levi-Civita connection, curvature and structure functions in frames.

Conventions (every consumer imports them from here):

* ``Gamma[A, B, C]`` = Gamma^A_BC = theta^A(nabla_{e_B} e_C).
* ``C[A, B, C]`` = C^A_BC = Gamma^A_BC - Gamma^A_CB, so [e_B, e_C] = C^A_BC e_A.
* ``J[A, B]`` = J^A_B with J e_B = J^A_B e_A.
* ``DJ[A, B, C]`` = D_A J^B_C; the derivative index always comes first.
* ``R[A, B, C, D]`` = R^A_{B CD}, the e_A component of R(e_C, e_D) e_B with
  R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y].  The Ricci identity then reads
  [D_C, D_D] T^A_B = R^A_{E CD} T^E_B - R^E_{B CD} T^A_E.
* ``Ric[B, D]`` = R^A_{B A D}.
* Antisymmetrisation X_[BC] has weight one (X_BC - X_CB) unless a helper
  says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .frames import (
    GEOMETRY_ORDER,
    FrameError,
    RealOrthonormalFrame,
    ambient_jets,
    build_orthonormal_frame,
    build_unitary_frame,
    gauge_rotate,
    linear_generator,
    regauge,
)
from .jets import Jet, jeinsum, jinv, jstack
from .manifolds import AmbientStructure

__all__ = [
    "LocalGeometry",
    "local_geometry",
    "christoffel",
    "anholonomic_connection",
    "cartan_structure_functions",
    "cartan_from_brackets",
    "riemann_tensor",
    "covariant_derivative",
    "frame_covd",
    "frame_deriv",
    "darboux_frame",
    "synchronous_frame",
    "darboux_identity_check",
    "appendix2_identity_suite",
    "structure_tensor",
    "antisym_residual",
    "CrossCheckError",
]

FRAME_KINDS = ("gram_schmidt", "unitary", "darboux", "synchronous")


class CrossCheckError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# primitive operations on jets
# ---------------------------------------------------------------------------

def coordinate_gradient(T: Jet) -> Jet:
    """[j, ...] = d_j T[...]; order drops by one."""
    return jstack([T.deriv(j) for j in range(T.basis.nvars)], axis=0)


def frame_deriv(T: Jet, E: Jet) -> Jet:
    """[A, ...] = theta_A(T) = E^j_A d_j T."""
    return jeinsum("jA,j...->A...", E, coordinate_gradient(T))


def to_frame(T: Jet, kinds: str, E: Jet, Einv: Jet) -> Jet:
    """Holonomic -> frame components; ``kinds`` is a string of 'u'/'l' per slot."""
    out = T
    n = len(kinds)
    letters = "bcdefgh"[:n]
    for s, kind in enumerate(kinds):
        src = letters[:s] + "z" + letters[s + 1 :]
        if kind == "u":
            out = jeinsum(f"{letters[s]}z,{src}->{letters}", Einv, out)
        else:
            out = jeinsum(f"z{letters[s]},{src}->{letters}", E, out)
    return out


def frame_covd(T: Jet, kinds: str, Gamma: Jet, E: Jet) -> Jet:
    """D_A T in frame components; the new index is prepended."""
    out = frame_deriv(T, E)
    letters = "bcdefgh"[: len(kinds)]
    for s, kind in enumerate(kinds):
        src = letters[:s] + "z" + letters[s + 1 :]
        if kind == "u":
            out = out + jeinsum(f"{letters[s]}az,{src}->a{letters}", Gamma, T)
        else:
            out = out - jeinsum(f"za{letters[s]},{src}->a{letters}", Gamma, T)
    return out


def holonomic_covd(T: Jet, kinds: str, gamma_hol: Jet) -> Jet:
    """D_k T in coordinates, derivative index first."""
    out = coordinate_gradient(T)
    letters = "bcdefgh"[: len(kinds)]
    for s, kind in enumerate(kinds):
        src = letters[:s] + "z" + letters[s + 1 :]
        if kind == "u":
            out = out + jeinsum(f"{letters[s]}az,{src}->a{letters}", gamma_hol, T)
        else:
            out = out - jeinsum(f"za{letters[s]},{src}->a{letters}", gamma_hol, T)
    return out


def antisym_residual(T: np.ndarray, axes=None) -> float:
    """Max deviation of T from total antisymmetry over ``axes``."""
    T = np.asarray(T)
    axes = tuple(range(T.ndim)) if axes is None else tuple(axes)
    worst = 0.0
    for perm in permutations(range(len(axes))):
        sign = _perm_sign(perm)
        full = list(range(T.ndim))
        for k, p in enumerate(perm):
            full[axes[k]] = axes[p]
        worst = max(worst, float(np.max(np.abs(T - sign * np.transpose(T, full)))))
    return worst


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# connection and curvature
# ---------------------------------------------------------------------------

def christoffel_jet(g: Jet) -> Jet:
    """Gamma^i_jk = 1/2 g^il (d_j g_lk + d_k g_lj - d_l g_jk)."""
    G = coordinate_gradient(g)  # [n, i, j] = d_n g_ij
    ginv = jinv(g.truncate(G.order))
    bracket = G.transpose(1, 0, 2) + G.transpose(1, 2, 0) - G  # [l, j, k]
    return jeinsum("il,ljk->ijk", ginv, bracket) * 0.5


def anholonomic_from(gamma_hol: Jet, E: Jet, Einv: Jet) -> Jet:
    dE = frame_deriv(E, E)  # [B, i, C] = theta_B(E^i_C)
    term = dE + jeinsum("jB,kC,ijk->BiC", E, E, gamma_hol)
    return jeinsum("Ai,BiC->ABC", Einv, term)


def cartan_from_brackets(E: Jet, Einv: Jet) -> Jet:
    """C^A_BC from [theta_B, theta_C] = C^A_BC theta_A, without any Christoffel symbol."""
    dE = frame_deriv(E, E)  # [B, i, C]
    bracket = dE - dE.transpose(2, 1, 0)  # [B, i, C] - [C, i, B]
    return jeinsum("Ai,BiC->ABC", Einv, bracket)


def riemann_from_gamma(Gamma: Jet, C: Jet, E: Jet) -> Jet:
    dG = frame_deriv(Gamma, E)  # [C, A, D, B] = theta_C Gamma^A_DB
    t = dG.transpose(1, 3, 0, 2) - dG.transpose(1, 3, 2, 0)  # [A, B, C, D]
    quad = jeinsum("ACE,EDB->ABCD", Gamma, Gamma)
    t = t + quad - quad.transpose(0, 1, 3, 2)
    t = t - jeinsum("FCD,AFB->ABCD", C, Gamma)
    return t


def riemann_holonomic(gamma_hol: Jet) -> Jet:
    """R^i_{jkl} = d_k Gamma^i_lj - d_l Gamma^i_kj + Gamma^i_km Gamma^m_lj - Gamma^i_lm Gamma^m_kj."""
    dG = coordinate_gradient(gamma_hol)  # [k, i, l, j]
    t = dG.transpose(1, 3, 0, 2) - dG.transpose(1, 3, 2, 0)
    quad = jeinsum("ikm,mlj->ijkl", gamma_hol, gamma_hol)
    return t + quad - quad.transpose(0, 1, 3, 2)


@dataclass(frozen=True)
class LocalGeometry:
    """Connection data around one point, in one frame."""

    ambient: AmbientStructure
    point: np.ndarray
    frame: RealOrthonormalFrame
    gamma_hol: Jet
    Gamma: Jet
    C: Jet
    J: Jet  # frame components J^A_B
    DJ: Jet

    @property
    def dim(self) -> int:
        return self.ambient.dim

    @property
    def E(self) -> Jet:
        return self.frame.E

    @property
    def Einv(self) -> Jet:
        return self.frame.Einv

    def riemann(self) -> Jet:
        return riemann_from_gamma(self.Gamma, self.C, self.E)

    def ricci(self) -> Jet:
        R = self.riemann()
        return jeinsum("ABAD->BD", R)

    def covd(self, T: Jet, kinds: str) -> Jet:
        return frame_covd(T, kinds, self.Gamma, self.E)


def _assemble(ambient: AmbientStructure, point, frame: RealOrthonormalFrame) -> LocalGeometry:
    g, _, Jh = ambient_jets(ambient, point, frame.E.order)
    gamma_hol = christoffel_jet(g)
    Gamma = anholonomic_from(gamma_hol, frame.E, frame.Einv)
    C = Gamma - Gamma.transpose(0, 2, 1)
    Jf = to_frame(Jh, "ul", frame.E, frame.Einv)
    DJ = frame_covd(Jf, "ul", Gamma, frame.E)
    return LocalGeometry(ambient, np.asarray(point, float), frame, gamma_hol, Gamma, C, Jf, DJ)


def darboux_frame(ambient: AmbientStructure, point, order: int = GEOMETRY_ORDER) -> RealOrthonormalFrame:
    """Orthonormal frame with constant standard omega in which Gamma = (1/2) J DJ at the point.

    Start from the J-adapted frame (omega already standard and constant), then
    rotate by exp(lambda) with lambda in u(m/2), linear in u - u0, chosen to
    remove the J-commuting part of every Gamma_B at the point.
    """
    U = build_unitary_frame(ambient, point, order)
    base = _assemble(ambient, point, U)
    G0 = base.Gamma.value  # [A, B, C]
    J0 = base.J.value
    slopes = np.empty_like(G0.transpose(1, 0, 2))
    for B in range(ambient.dim):
        GB = G0[:, B, :]
        slopes[B] = -0.5 * (GB - J0 @ GB @ J0)
    return gauge_rotate(U, linear_generator(U, slopes), "darboux")


def synchronous_frame(ambient: AmbientStructure, point, order: int = GEOMETRY_ORDER) -> RealOrthonormalFrame:
    """Gram-Schmidt frame rotated to first order so that Gamma vanishes at the point."""
    F = build_orthonormal_frame(ambient, point, order)
    base = _assemble(ambient, point, F)
    slopes = -base.Gamma.value.transpose(1, 0, 2)
    return gauge_rotate(F, linear_generator(F, slopes), "synchronous")


_GEOM_CACHE: dict = {}


def local_geometry(ambient: AmbientStructure, point, kind: str = "gram_schmidt",
                   order: int = GEOMETRY_ORDER, regauge_Q: np.ndarray | None = None) -> LocalGeometry:
    point = ambient.manifold.check_point(point)
    key = (id(ambient.manifold), ambient.manifold.name, tuple(point.tolist()), kind, order,
           None if regauge_Q is None else regauge_Q.tobytes())
    hit = _GEOM_CACHE.get(key)
    if hit is not None:
        return hit
    if kind == "gram_schmidt":
        frame = build_orthonormal_frame(ambient, point, order)
    elif kind == "unitary":
        frame = build_unitary_frame(ambient, point, order)
    elif kind == "darboux":
        frame = darboux_frame(ambient, point, order)
    elif kind == "synchronous":
        frame = synchronous_frame(ambient, point, order)
    else:
        raise FrameError(f"unknown frame kind {kind!r}")
    if regauge_Q is not None:
        frame = regauge(frame, regauge_Q)
    geo = _assemble(ambient, point, frame)
    if len(_GEOM_CACHE) > 256:
        _GEOM_CACHE.clear()
    _GEOM_CACHE[key] = geo
    return geo


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectionCoefficients:
    gamma_hol: np.ndarray | None = None
    gamma_anh: np.ndarray | None = None


@dataclass(frozen=True)
class CartanStructureFunctions:
    C: np.ndarray
    C_bracket: np.ndarray
    crosscheck: float


@dataclass(frozen=True)
class RiemannTensor:
    R: np.ndarray
    ricci: np.ndarray
    bianchi: float
    holonomic_agreement: float


def christoffel(ambient: AmbientStructure, point) -> ConnectionCoefficients:
    g, _, _ = ambient_jets(ambient, point, 1)
    if abs(np.linalg.det(g.value)) < 1e-14:
        raise FrameError("singular metric")
    return ConnectionCoefficients(gamma_hol=christoffel_jet(g).value)


def anholonomic_connection(ambient: AmbientStructure, point, kind: str = "gram_schmidt") -> ConnectionCoefficients:
    geo = local_geometry(ambient, point, kind)
    return ConnectionCoefficients(gamma_hol=geo.gamma_hol.value, gamma_anh=geo.Gamma.value)


def cartan_structure_functions(ambient: AmbientStructure, point, kind: str = "gram_schmidt",
                               abort_above: float = 1e-6) -> CartanStructureFunctions:
    geo = local_geometry(ambient, point, kind)
    C = geo.C.value
    Cb = cartan_from_brackets(geo.E, geo.Einv).value
    diff = float(np.max(np.abs(C - Cb)))
    if diff > abort_above:
        raise CrossCheckError(f"structure functions disagree between routes: {diff:.3e}")
    return CartanStructureFunctions(C, Cb, diff)


def riemann_tensor(ambient: AmbientStructure, point, kind: str = "gram_schmidt") -> RiemannTensor:
    geo = local_geometry(ambient, point, kind)
    R = geo.riemann().value
    bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    Rh = to_frame(riemann_holonomic(geo.gamma_hol), "ulll", geo.E, geo.Einv).value
    return RiemannTensor(R, np.einsum("ABAD->BD", R), float(np.max(np.abs(bianchi))),
                         float(np.max(np.abs(R - Rh))))


def covariant_derivative(ambient: AmbientStructure, tensor_label: str, point, kind: str = "gram_schmidt") -> np.ndarray:
    """Frame components of D_A T for a registered field T."""
    geo = local_geometry(ambient, point, kind)
    spec = ambient.manifold.field(tensor_label)
    T = spec.evaluate(Jet.variables(geo.point, geo.E.basis))
    kinds = "u" * spec.valence[0] + "l" * spec.valence[1]
    Tf = to_frame(T, kinds, geo.E, geo.Einv)
    return geo.covd(Tf, kinds).value


def structure_tensor(J: Jet, DJ: Jet, weight: float = 1.0) -> Jet:
    """C^A_BC = 1/2 J^A_D D_[B J^D_C] with antisymmetrisation weight ``weight``."""
    t = jeinsum("AD,BDC->ABC", J, DJ)
    return (t - t.transpose(0, 2, 1)) * (0.5 * weight)


def ricci_identity_residual(geo: LocalGeometry) -> float:
    """|[D_C, D_D] J^A_B - (R^A_{E CD} J^E_B - R^E_{B CD} J^A_E)|."""
    DDJ = geo.covd(geo.DJ, "lul")  # [C, D, A, B]
    comm = DDJ - DDJ.transpose(1, 0, 2, 3)
    R = geo.riemann()
    rhs = jeinsum("AECD,EB->CDAB", R, geo.J) - jeinsum("EBCD,AE->CDAB", R, geo.J)
    return float(np.max(np.abs((comm - rhs).value)))


def darboux_identity_check(ambient: AmbientStructure, point) -> dict[str, float]:
    """Residuals of Gamma = (1/2) J DJ and of the structure-function corollary in the Darboux frame."""
    geo = local_geometry(ambient, point, "darboux")
    J0 = geo.J.value
    m = ambient.dim
    h = m // 2
    std = np.zeros((m, m))
    std[h:, :h] = np.eye(h)
    std[:h, h:] = -np.eye(h)
    Gamma = geo.Gamma.value
    C = geo.C.value
    half_JDJ = 0.5 * np.einsum("AD,BDC->ABC", J0, geo.DJ.value)
    # omega_AB = J^B_A in an orthonormal frame; check it is standard and constant
    omega = geo.J.transpose(1, 0)
    return {
        "darboux-omega": float(np.max(np.abs(omega.value - std.T))),
        "darboux-domega": float(np.max(np.abs(frame_deriv(omega, geo.E).value))),
        "E3": float(np.max(np.abs(Gamma - half_JDJ))),
        "E4": float(np.max(np.abs(C - structure_tensor(geo.J, geo.DJ, 1.0).value))),
        "E4-half-weight": float(np.max(np.abs(C - structure_tensor(geo.J, geo.DJ, 0.5).value))),
    }


def appendix2_identity_suite(ambient: AmbientStructure, point, kind: str = "darboux") -> dict[str, float]:
    """Per-identity residuals of the almost-Kaehler identity list.

    Index reading: in an orthonormal frame every placement of J (J^a_b,
    J_a^b, J_ab) means ``J[a, b]``, first written index first.  The structure
    tensor is Cs[m, i, j] = 1/2 J[m, n] (DJ[i, j, n] - DJ[j, i, n]).
    """
    geo = local_geometry(ambient, point, kind)
    J, DJ = geo.J, geo.DJ
    J0, DJ0 = J.value, DJ.value
    out: dict[str, float] = {}

    def mx(a):
        return float(np.max(np.abs(a)))

    def anti(t, i, j):
        axes = list(range(t.ndim))
        axes[i], axes[j] = axes[j], axes[i]
        return t - t.transpose(axes)

    out["A1"] = mx(np.einsum("kik->i", DJ0))
    out["A2"] = mx(DJ0 + np.einsum("rk,si,rsj->kij", J0, J0, DJ0))
    out["A3"] = mx(np.einsum("mn,knl->kml", J0, DJ0) + np.einsum("nl,kmn->kml", J0, DJ0))
    Jh = field_J_jet(geo)
    dJh, Jh0 = coordinate_gradient(Jh).value, Jh.value
    out["A3-partial"] = mx(np.einsum("mn,knl->kml", Jh0, dJh) + np.einsum("nl,kmn->kml", Jh0, dJh))

    Cs = jeinsum("mn,ijn->mij", J, DJ)
    Cs = (Cs - Cs.transpose(0, 2, 1)) * 0.5
    C0 = Cs.value
    out["A4"] = antisym_residual(C0)
    line1 = anti(-0.5 * np.einsum("nm,rk,sn,rsl->mkl", J0, J0, J0, DJ0), 1, 2)
    line2 = anti(0.5 * np.einsum("rk,rml->mkl", J0, DJ0), 1, 2)
    line3 = -0.5 * np.einsum("nm,nkl->mkl", J0, anti(DJ0, 1, 2))
    A = anti(DJ0, 0, 1)  # [k, l, n]
    S = A + A.transpose(2, 1, 0)  # symmetrise k with n
    out["A5-first"] = mx(C0 - line1)
    out["A5-second"] = mx(C0 - line2)
    out["A5-last"] = mx(C0 - line3)
    out["A5-iff"] = mx(np.einsum("mn,kln->mkl", J0, S))

    DC0 = geo.covd(Cs, "lll").value  # [q, m, k, l]
    out["A6-10"] = antisym_residual(DC0)
    DDJ = geo.covd(DJ, "lul").value  # [q, k, n, l] = D_q D_k J^n_l
    first = anti(0.5 * np.einsum("qnm,knl->qmkl", DJ0, DJ0), 2, 3)
    second = anti(0.5 * np.einsum("nm,qknl->qmkl", J0, DDJ), 2, 3)
    out["A7"] = mx(DC0 - first - second)
    out["A8"] = mx(first + first.transpose(2, 1, 0, 3))
    out["A9-10"] = mx(second + second.transpose(2, 1, 0, 3))

    thetaC = frame_deriv(Cs, geo.E).value
    out["A11"] = mx(DC0 - thetaC)
    delta = np.eye(geo.dim)
    out["A12"] = mx(np.einsum("aecd,eb->abcd", DC0, delta) - np.einsum("aecd,eb->abcd", thetaC, delta))

    R = geo.riemann().value  # R^A_{B CD}
    Ric = np.einsum("ABAD->BD", R)
    # C_BC^D read as Cs[D, B, C]; the right-hand side taken literally
    lhs = DC0.transpose(0, 2, 3, 1)  # [A, B, C, D]
    rhs = (np.einsum("ADF,BCF->ABCD", DJ0, DJ0)
           + np.einsum("DF,FKAB,CK->ABCD", J0, R, J0)
           + np.einsum("DF,CB,FA->ABCD", J0, Ric, J0))
    out["A13"] = mx(lhs - rhs)
    out["A13-DJ-part"] = mx(lhs - np.einsum("ADF,BCF->ABCD", DJ0, DJ0))
    out["ricci-identity"] = ricci_identity_residual(geo)
    out["DJ-max"] = mx(DJ0)
    out["C-max"] = mx(C0)
    return out


def field_J_jet(geo: LocalGeometry) -> Jet:
    _, _, Jh = ambient_jets(geo.ambient, geo.point, geo.E.order)
    return Jh
