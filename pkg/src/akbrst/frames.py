"""Vielbein families: real orthonormal, J-pseudoholomorphic, surface and combined.

Frames are carried as jets in the chart coordinates so that connection and
curvature data can be read off by differentiation.  Index layout is fixed
throughout the package:

* ``E[i, A]``    = E^i_A, the frame vector fields as columns,
* ``Einv[A, i]`` = E^A_i, the dual coframe as rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, get_basis, jconcat, jeinsum, jexpm, jinv, jmatmul, jstack, sqrt
from .manifolds import AmbientStructure, ManifoldError, SurfaceStructure, field_jet

__all__ = [
    "FrameError",
    "RealOrthonormalFrame",
    "PseudoholomorphicFrame",
    "SurfaceFrame",
    "CombinedFrame",
    "FrameSystem",
    "ambient_jets",
    "build_orthonormal_frame",
    "build_unitary_frame",
    "build_pseudoholomorphic_frame",
    "build_surface_frame",
    "combine_frames",
    "regauge",
    "linear_generator",
    "gauge_rotate",
    "build_frame_system",
    "verify_frame_identities",
    "GEOMETRY_ORDER",
]

GEOMETRY_ORDER = 3
PIVOT_FLOOR = 1e-12
RANK_THRESHOLD = 1e-10


class FrameError(ManifoldError):
    pass


_JET_CACHE: dict = {}


def ambient_jets(ambient: AmbientStructure, point, order: int = GEOMETRY_ORDER):
    """(g, omega, J) as jets at ``point``; memoised per (model, point, order)."""
    point = ambient.manifold.check_point(point)
    key = (id(ambient.manifold), ambient.manifold.name, tuple(point.tolist()), order)
    hit = _JET_CACHE.get(key)
    if hit is None:
        if len(_JET_CACHE) > 512:
            _JET_CACHE.clear()
        hit = tuple(field_jet(ambient.manifold, lab, point, order) for lab in ("g", "omega", "J"))
        _JET_CACHE[key] = hit
    return hit


@dataclass(frozen=True)
class RealOrthonormalFrame:
    point: np.ndarray
    E: Jet  # E^i_A
    Einv: Jet  # E^A_i
    kind: str = "gram_schmidt"

    @property
    def dim(self) -> int:
        return self.E.shape[0]

    @property
    def E_up(self) -> np.ndarray:
        return self.E.value

    @property
    def E_down(self) -> np.ndarray:
        return self.Einv.value


@dataclass(frozen=True)
class PseudoholomorphicFrame:
    point: np.ndarray
    E_hol: Jet  # E^i_a, (m, m/2) complex
    E_antihol: Jet  # E^i_{a*}
    Einv_hol: Jet  # E^a_i, (m/2, m)
    Einv_antihol: Jet  # E^{a*}_i
    selected: tuple[int, ...]

    @property
    def half(self) -> int:
        return self.E_hol.shape[1]


@dataclass(frozen=True)
class SurfaceFrame:
    E_k: np.ndarray  # E^alpha_kappa, shape (2,)
    E_kbar: np.ndarray  # E^alpha_{kappa*}
    Einv_k: np.ndarray  # E^kappa_alpha
    Einv_kbar: np.ndarray  # E^{kappa*}_alpha


@dataclass(frozen=True)
class CombinedFrame:
    up_hol: Jet  # E^A_a := E^A_i E^i_a, (m, m/2)
    up_antihol: Jet  # E^A_{a*}
    down_hol: Jet  # E^a_A := E^a_i E^i_A, (m/2, m)
    down_antihol: Jet  # E^{a*}_A


@dataclass(frozen=True)
class FrameSystem:
    ambient: AmbientStructure
    surface: SurfaceStructure
    orth: RealOrthonormalFrame
    pseudo: PseudoholomorphicFrame
    surf: SurfaceFrame
    comb: CombinedFrame


# ---------------------------------------------------------------------------
# real frames
# ---------------------------------------------------------------------------

def _inner(g: Jet, v: Jet, w: Jet) -> Jet:
    return jeinsum("i,ij,j->", v, g, w)


def _coordinate_vector(k: int, m: int, basis) -> Jet:
    e = np.zeros(m)
    e[k] = 1.0
    return Jet.constant(e, basis)


def _finish(point, vectors, kind) -> RealOrthonormalFrame:
    E = jstack(vectors, axis=1)
    return RealOrthonormalFrame(np.asarray(point, dtype=float), E, jinv(E), kind)


def build_orthonormal_frame(ambient: AmbientStructure, point, order: int = GEOMETRY_ORDER) -> RealOrthonormalFrame:
    """Gram-Schmidt on the coordinate basis against g, in coordinate order."""
    g, _, _ = ambient_jets(ambient, point, order)
    m = ambient.dim
    vectors: list[Jet] = []
    for k in range(m):
        v = _coordinate_vector(k, m, g.basis)
        for e in vectors:
            v = v - e * _inner(g, v, e)
        n2 = _inner(g, v, v)
        if n2.value <= PIVOT_FLOOR:
            raise FrameError(f"Gram-Schmidt pivot {float(n2.value):.3e} <= 1e-12: metric not positive definite")
        vectors.append(v / sqrt(n2))
    return _finish(point, vectors, "gram_schmidt")


def build_unitary_frame(ambient: AmbientStructure, point, order: int = GEOMETRY_ORDER) -> RealOrthonormalFrame:
    """Orthonormal frame (e_1..e_h, J e_1..J e_h); J and omega take standard form in it."""
    g, _, J = ambient_jets(ambient, point, order)
    m = ambient.dim
    h = m // 2
    firsts: list[Jet] = []
    seconds: list[Jet] = []
    for k in range(m):
        if len(firsts) == h:
            break
        v = _coordinate_vector(k, m, g.basis)
        for e in firsts + seconds:
            v = v - e * _inner(g, v, e)
        n2 = _inner(g, v, v)
        if n2.value <= 1e-8:
            continue
        e = v / sqrt(n2)
        firsts.append(e)
        seconds.append(jmatmul(J, e))
    if len(firsts) != h:
        raise FrameError("could not complete a J-adapted orthonormal frame")
    return _finish(point, firsts + seconds, "unitary")


def gauge_rotate(frame: RealOrthonormalFrame, generator: Jet, kind: str) -> RealOrthonormalFrame:
    """Right-multiply the frame by exp(generator); generator must vanish at the point."""
    R = jexpm(generator)
    E = jmatmul(frame.E, R)
    return RealOrthonormalFrame(frame.point, E, jinv(E), kind)


def regauge(frame: RealOrthonormalFrame, Q: np.ndarray) -> RealOrthonormalFrame:
    """Constant orthogonal change of frame E -> E Q."""
    Q = np.asarray(Q, dtype=float)
    E = jmatmul(frame.E, Q)
    Einv = jmatmul(Q.T, frame.Einv)
    return RealOrthonormalFrame(frame.point, E, Einv, frame.kind + "+regauged")


def linear_generator(frame: RealOrthonormalFrame, slopes: np.ndarray) -> Jet:
    """lambda(u) = sum_B slopes[B] theta^B_i (u - u0)^i as a matrix-valued jet.

    With this choice theta_B(lambda) = slopes[B] at the point.
    """
    basis = frame.E.basis
    du = Jet.variables(frame.point, basis) - frame.point
    theta = jeinsum("Bi,i->B", frame.Einv.value, du)
    return jeinsum("B,BAC->AC", theta, np.asarray(slopes, dtype=float))


# ---------------------------------------------------------------------------
# complex frames
# ---------------------------------------------------------------------------

def _select_columns(cols: np.ndarray, want: int) -> tuple[int, ...]:
    """Pivoted elimination: keep columns that are independent of those already kept."""
    work = np.array(cols, dtype=complex)
    m = work.shape[0]
    chosen: list[int] = []
    used_rows: list[int] = []
    for k in range(work.shape[1]):
        v = work[:, k].copy()
        for r, j in zip(used_rows, chosen):
            piv = work[:, j]
            v = v - piv * (v[r] / piv[r])
        mag = np.abs(v)
        mag[used_rows] = 0.0
        r = int(np.argmax(mag)) if m else 0
        if mag[r] <= RANK_THRESHOLD:
            continue
        work[:, k] = v
        chosen.append(k)
        used_rows.append(r)
        if len(chosen) == want:
            break
    if len(chosen) != want:
        raise FrameError("projected columns are rank deficient; J is not a complex structure here")
    return tuple(chosen)


def build_pseudoholomorphic_frame(ambient: AmbientStructure, point, orth: RealOrthonormalFrame | None = None,
                                  order: int = GEOMETRY_ORDER) -> PseudoholomorphicFrame:
    """+i eigenvectors of J from the projector (1 - iJ)/2 applied to an orthonormal frame."""
    if orth is None:
        orth = build_orthonormal_frame(ambient, point, order)
    _, _, J = ambient_jets(ambient, point, orth.E.order)
    m = ambient.dim
    J0 = J.value
    if np.max(np.abs(J0 @ J0 + np.eye(m))) > 1e-8:
        raise FrameError("J does not square to -1 at the point")
    proj = (Jet.constant(np.eye(m), J.basis) - J * 1j) * 0.5
    cols = jmatmul(proj, orth.E)
    sel = _select_columns(cols.value, m // 2)
    E_hol = cols[:, list(sel)]
    E_anti = E_hol.conj()
    full = jconcat([E_hol, E_anti], axis=1)
    inv = jinv(full)
    h = m // 2
    return PseudoholomorphicFrame(np.asarray(point, float), E_hol, E_anti, inv[:h], inv[h:], sel)


def build_surface_frame(surface: SurfaceStructure, point=None) -> SurfaceFrame:
    """+i eigenvector of eps from (1 - i eps)/2 applied to the first coordinate vector."""
    eps = surface.eps
    cols = 0.5 * (np.eye(2) - 1j * eps)
    k = 0 if np.max(np.abs(cols[:, 0])) > RANK_THRESHOLD else 1
    Ek = cols[:, k]
    full = np.stack([Ek, Ek.conj()], axis=1)
    inv = np.linalg.inv(full)
    return SurfaceFrame(Ek, Ek.conj(), inv[0], inv[1])


def combine_frames(orth: RealOrthonormalFrame, pseudo: PseudoholomorphicFrame) -> CombinedFrame:
    if orth.dim != pseudo.E_hol.shape[0]:
        raise FrameError("dimension mismatch between real and complex frames")
    if not np.allclose(orth.point, pseudo.point):
        raise FrameError("frames built at different points")
    up_hol = jmatmul(orth.Einv, pseudo.E_hol)
    down_hol = jmatmul(pseudo.Einv_hol, orth.E)
    return CombinedFrame(up_hol, up_hol.conj(), down_hol, down_hol.conj())


def build_frame_system(ambient: AmbientStructure, surface: SurfaceStructure, point,
                       orth: RealOrthonormalFrame | None = None, order: int = GEOMETRY_ORDER) -> FrameSystem:
    if orth is None:
        orth = build_orthonormal_frame(ambient, point, order)
    pseudo = build_pseudoholomorphic_frame(ambient, point, orth)
    return FrameSystem(ambient, surface, orth, pseudo, build_surface_frame(surface), combine_frames(orth, pseudo))


# ---------------------------------------------------------------------------
# identity report
# ---------------------------------------------------------------------------

def _derivation_action(vec: np.ndarray, point, nvars: int) -> np.ndarray:
    """Apply the vector fields vec[:, k] to the coordinate functions u^j (via jets)."""
    u = Jet.variables(point, get_basis(nvars, 1))
    grads = u.grad()  # d_i u^j
    return np.einsum("ji,ik->jk", grads, vec)


def _mx(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def verify_frame_identities(frames: FrameSystem, point=None) -> dict[str, float]:
    """Maximum absolute residual of every vielbein identity at the frame point."""
    amb = frames.ambient
    pt = frames.orth.point
    m = amb.dim
    h = m // 2
    g = amb.g(pt)
    J = amb.J(pt)
    E = frames.orth.E.value
    Ei = frames.orth.Einv.value
    I = np.eye(m)
    out: dict[str, float] = {}
    out["RA1"] = max(_mx(Ei @ E - I), _mx(E @ Ei - I))
    act = _derivation_action(E, pt, m)  # theta_A(u^i)
    out["RA2"] = max(_mx(act - E), _mx(Ei @ act - I))
    out["RA3-frame"] = _mx(E.T @ g @ E - I)
    out["RA3-metric"] = _mx(g - Ei.T @ Ei)

    P = frames.pseudo
    Eh, Ea = P.E_hol.value, P.E_antihol.value
    Fh, Fa = P.Einv_hol.value, P.Einv_antihol.value
    Ih = np.eye(h)
    out["JA1"] = max(_mx(Fh @ Eh - Ih), _mx(Fa @ Ea - Ih))
    out["JA2"] = max(_mx(Fa @ Eh), _mx(Fh @ Ea))
    out["JA3"] = _mx(Eh @ Fh + Ea @ Fa - I)
    act_h = _derivation_action(Eh, pt, m)
    act_a = _derivation_action(Ea, pt, m)
    out["JA4"] = max(_mx(Fh @ act_h - Ih), _mx(Fa @ act_a - Ih), _mx(Fh @ act_a), _mx(Fa @ act_h))
    out["JA5"] = max(_mx(act_h - Eh), _mx(act_a - Ea))
    out["conj-pseudo"] = max(_mx(Ea - Eh.conj()), _mx(Fa - Fh.conj()))

    S = frames.surf
    eps = frames.surface.eps
    out["CH1"] = max(_mx(S.Einv_k @ S.E_k - 1), _mx(S.Einv_kbar @ S.E_kbar - 1))
    out["CH2"] = max(_mx(S.Einv_kbar @ S.E_k), _mx(S.Einv_k @ S.E_kbar))
    out["CH3"] = _mx(np.outer(S.E_k, S.Einv_k) + np.outer(S.E_kbar, S.Einv_kbar) - np.eye(2))
    out["CH4"] = max(_mx(S.Einv_k @ np.stack([S.E_k, S.E_kbar], 1) - [1, 0]), _mx(S.Einv_kbar @ np.stack([S.E_k, S.E_kbar], 1) - [0, 1]))
    out["CH5"] = max(_mx(_derivation_action(S.E_k[:, None], [0.0, 0.0], 2)[:, 0] - S.E_k),
                     _mx(_derivation_action(S.E_kbar[:, None], [0.0, 0.0], 2)[:, 0] - S.E_kbar))
    out["conj-surface"] = max(_mx(S.E_kbar - S.E_k.conj()), _mx(S.Einv_kbar - S.Einv_k.conj()))

    C = frames.comb
    uh, ua = C.up_hol.value, C.up_antihol.value
    dh, da = C.down_hol.value, C.down_antihol.value
    out["CBA1"] = max(_mx(dh @ uh - Ih), _mx(da @ ua - Ih))
    out["CBA2"] = max(_mx(da @ uh), _mx(dh @ ua))
    out["CBA3"] = _mx(uh @ dh + ua @ da - I)

    out["EIG-J-vec"] = max(_mx(J @ Eh - 1j * Eh), _mx(J @ Ea + 1j * Ea))
    out["EIG-J-covec"] = max(_mx(Fh @ J - 1j * Fh), _mx(Fa @ J + 1j * Fa))
    out["EIG-eps-vec"] = max(_mx(eps @ S.E_k - 1j * S.E_k), _mx(eps @ S.E_kbar + 1j * S.E_kbar))
    out["EIG-eps-covec"] = max(_mx(S.Einv_k @ eps - 1j * S.Einv_k), _mx(S.Einv_kbar @ eps + 1j * S.Einv_kbar))
    return out
