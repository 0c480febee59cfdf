"""Charted local manifold models and their tensor fields.

Fields are closed-form expressions in the chart coordinates.  Evaluating
them on jets gives exact derivatives to any fixed order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .expr import Expression, ExpressionError
from .jets import Jet, get_basis, jinv, jmatmul

__all__ = [
    "ManifoldError",
    "TensorFieldSpec",
    "ChartedManifold",
    "AmbientStructure",
    "SurfaceStructure",
    "BUILTINS",
    "get_manifold",
    "list_manifolds",
    "load_config",
    "eval_tensor",
    "field_jet",
    "partial_derivative",
    "build_compatible_triple",
    "compatible_triple_jet",
    "nijenhuis_tensor",
    "nijenhuis_from_jet",
    "standard_surface",
]

DET_FLOOR = 1e-12
EIG_FLOOR = 1e-12


class ManifoldError(ValueError):
    pass


@dataclass(frozen=True)
class TensorFieldSpec:
    valence: tuple[int, int]
    components: tuple  # nested tuples of expression strings
    names: tuple[str, ...]
    _compiled: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dim = len(self.names)
        rank = sum(self.valence)
        arr = np.empty((dim,) * rank, dtype=object)
        raw = np.array(self.components, dtype=object)
        if raw.shape != (dim,) * rank:
            raise ManifoldError(f"expected {dim ** rank} components of shape {(dim,) * rank}, got {raw.shape}")
        for idx in np.ndindex(raw.shape):
            arr[idx] = Expression(raw[idx], self.names)
        object.__setattr__(self, "_compiled", arr)

    @property
    def rank(self) -> int:
        return sum(self.valence)

    def evaluate(self, coords):
        """Components at ``coords`` (floats or a Jet vector of coordinates)."""
        if isinstance(coords, Jet):
            basis = coords.basis
            cs = [coords[k] for k in range(coords.shape[0])]
            out = np.empty(self._compiled.shape + (basis.ncoef,))
            for idx in np.ndindex(self._compiled.shape):
                v = self._compiled[idx](cs)
                out[idx] = v.c if isinstance(v, Jet) else Jet.constant(v, basis).c
            return Jet(out, basis)
        coords = [float(x) for x in coords]
        out = np.empty(self._compiled.shape)
        for idx in np.ndindex(self._compiled.shape):
            out[idx] = self._compiled[idx](coords)
        return out

    def expressions(self) -> np.ndarray:
        return np.vectorize(lambda e: e.source, otypes=[object])(self._compiled)


@dataclass(frozen=True)
class ChartedManifold:
    name: str
    coordinate_names: tuple[str, ...]
    tensor_fields: Mapping[str, TensorFieldSpec]
    sample_domain: tuple[tuple[float, float], ...]
    description: str = ""

    def __post_init__(self):
        if self.dim < 2:
            raise ManifoldError("dim must be at least 2")
        if len(self.sample_domain) != self.dim:
            raise ManifoldError("sample_domain needs one interval per coordinate")
        for lo, hi in self.sample_domain:
            if not lo <= hi:
                raise ManifoldError("empty sample interval")

    @property
    def dim(self) -> int:
        return len(self.coordinate_names)

    def contains(self, point, tol: float = 1e-12) -> bool:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            return False
        return all(lo - tol <= x <= hi + tol for x, (lo, hi) in zip(point, self.sample_domain))

    def check_point(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise ManifoldError(f"{self.name}: point must have {self.dim} coordinates")
        if not self.contains(point):
            raise ManifoldError(f"{self.name}: point {point.tolist()} outside sample domain")
        return point

    def field(self, label: str) -> TensorFieldSpec:
        try:
            return self.tensor_fields[label]
        except KeyError:
            raise ManifoldError(f"{self.name}: unknown tensor field {label!r}") from None

    def sample_points(self, n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo = np.array([a for a, _ in self.sample_domain])
        hi = np.array([b for _, b in self.sample_domain])
        return lo + (hi - lo) * rng.random((n, self.dim))

    def is_ambient(self) -> bool:
        return self.dim % 2 == 0 and all(k in self.tensor_fields for k in ("g", "omega", "J"))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "coordinates": list(self.coordinate_names),
            "domain": [list(iv) for iv in self.sample_domain],
            "fields": {
                label: {
                    "valence": list(spec.valence),
                    "components": spec.expressions().tolist(),
                }
                for label, spec in self.tensor_fields.items()
            },
        }


def _manifold_from_dict(data: Mapping) -> ChartedManifold:
    try:
        name = str(data["name"])
        coords = tuple(str(c) for c in data["coordinates"])
        domain = tuple((float(a), float(b)) for a, b in data["domain"])
        fields = {}
        for label, spec in data.get("fields", {}).items():
            fields[label] = TensorFieldSpec(tuple(spec["valence"]), spec["components"], coords)
    except (KeyError, TypeError) as exc:
        raise ManifoldError(f"malformed manifold definition: {exc}") from None
    except ExpressionError as exc:
        raise ManifoldError(str(exc)) from None
    if "dim" in data and int(data["dim"]) != len(coords):
        raise ManifoldError("dim does not match the number of coordinates")
    return ChartedManifold(name, coords, fields, domain, str(data.get("description", "")))


def load_config(path: str | Path) -> ChartedManifold:
    """Read a manifold from a YAML or JSON file."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) if Path(path).suffix.lower() != ".json" else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ManifoldError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ManifoldError(f"{path}: top level must be a mapping")
    return _manifold_from_dict(data)


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

_FLAT = {
    "name": "flat_kahler",
    "description": "R^4 with the Euclidean metric and the constant Darboux form; Abelian control",
    "coordinates": ["u1", "u2", "u3", "u4"],
    "domain": [[-1, 1]] * 4,
    "fields": {
        "g": {"valence": [0, 2], "components": np.eye(4).tolist()},
        "omega": {
            "valence": [0, 2],
            "components": [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]],
        },
        "J": {
            "valence": [1, 1],
            "components": [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]],
        },
    },
}

_SPHERE = {
    "name": "sphere",
    "description": "round unit sphere chart (theta, phi) with its area form; curved Kaehler control",
    "coordinates": ["theta", "phi"],
    "domain": [[0.3, 3.141592653589793 - 0.3], [0.0, 6.283185307179586]],
    "fields": {
        "g": {"valence": [0, 2], "components": [[1, 0], [0, "sin(theta)**2"]]},
        "omega": {"valence": [0, 2], "components": [[0, "sin(theta)"], ["-sin(theta)", 0]]},
        "J": {"valence": [1, 1], "components": [[0, "-sin(theta)"], ["1/sin(theta)", 0]]},
    },
}

# coframe e1 = dx, e2 = dy, e3 = dz - x dy, e4 = dt with J e1 = e3, J e2 = e4
_NIL = {
    "name": "nilmanifold",
    "description": "left-invariant almost Kaehler structure on a nilpotent Lie group chart; not integrable",
    "coordinates": ["x", "y", "z", "t"],
    "domain": [[-1, 1]] * 4,
    "fields": {
        "g": {
            "valence": [0, 2],
            "components": [[1, 0, 0, 0], [0, "1 + x**2", "-x", 0], [0, "-x", 1, 0], [0, 0, 0, 1]],
        },
        "omega": {
            "valence": [0, 2],
            "components": [[0, "-x", 1, 0], ["x", 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]],
        },
        "J": {
            "valence": [1, 1],
            "components": [[0, "x", -1, 0], [0, 0, 0, -1], [1, 0, 0, "-x"], [0, 1, 0, 0]],
        },
    },
}

BUILTINS: dict[str, ChartedManifold] = {d["name"]: _manifold_from_dict(d) for d in (_FLAT, _SPHERE, _NIL)}


def list_manifolds() -> list[str]:
    return sorted(BUILTINS)


def get_manifold(name_or_path: str) -> ChartedManifold:
    if name_or_path in BUILTINS:
        return BUILTINS[name_or_path]
    p = Path(name_or_path)
    if p.suffix.lower() in (".yaml", ".yml", ".json") and p.exists():
        return load_config(p)
    raise ManifoldError(f"unknown manifold {name_or_path!r}; built-ins: {', '.join(list_manifolds())}")


# ---------------------------------------------------------------------------
# evaluation and derivatives
# ---------------------------------------------------------------------------

def eval_tensor(manifold: ChartedManifold, field_label: str, point) -> np.ndarray:
    """Holonomic components of a registered field at ``point``."""
    spec = manifold.field(field_label)
    return spec.evaluate(manifold.check_point(point))


def field_jet(manifold: ChartedManifold, field_label: str, point, order: int) -> Jet:
    spec = manifold.field(field_label)
    point = manifold.check_point(point)
    return spec.evaluate(Jet.variables(point, get_basis(manifold.dim, order)))


def partial_derivative(manifold: ChartedManifold, field_label: str, point, direction: int, order: int = 1) -> np.ndarray:
    """d^order/du_direction^order of every component, exact through Taylor arithmetic."""
    if order not in (1, 2):
        raise ManifoldError("only first and second derivatives are supported")
    if not 0 <= direction < manifold.dim:
        raise ManifoldError(f"direction {direction} out of range")
    jet = field_jet(manifold, field_label, point, order)
    for _ in range(order):
        jet = jet.deriv(direction)
    return jet.value.copy()


@dataclass(frozen=True)
class SurfaceStructure:
    """Constant complex structure eps^alpha_beta on a 2-dimensional chart."""

    eps: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        if eps.shape != (2, 2):
            raise ManifoldError("eps must be 2x2")
        if np.max(np.abs(eps @ eps + np.eye(2))) > 1e-12:
            raise ManifoldError("eps does not square to -1")
        object.__setattr__(self, "eps", eps)


def standard_surface() -> SurfaceStructure:
    # eps d1 = d2, eps d2 = -d1
    return SurfaceStructure(np.array([[0.0, -1.0], [1.0, 0.0]]))


@dataclass(frozen=True)
class AmbientStructure:
    """(g, omega, J) on a charted manifold, evaluable at points."""

    manifold: ChartedManifold

    def __post_init__(self):
        if not self.manifold.is_ambient():
            raise ManifoldError(f"{self.manifold.name} does not carry g, omega and J on an even-dimensional chart")

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def g(self, point):
        return eval_tensor(self.manifold, "g", point)

    def omega(self, point):
        return eval_tensor(self.manifold, "omega", point)

    def J(self, point):
        return eval_tensor(self.manifold, "J", point)

    def jets(self, point, order: int):
        return tuple(field_jet(self.manifold, lab, point, order) for lab in ("g", "omega", "J"))

    def invariant_residuals(self, point) -> dict[str, float]:
        g, w, J = self.jets(point, 1)
        g0, w0, J0 = g.value, w.value, J.value
        m = self.dim
        dw = w.grad()  # dw[j, k, i] = d_i w_jk
        cyc = np.einsum("jki->ijk", dw) + np.einsum("kij->ijk", dw) + dw
        eig = np.linalg.eigvalsh(0.5 * (g0 + g0.T))
        return {
            "J2": float(np.max(np.abs(J0 @ J0 + np.eye(m)))),
            "g_sym": float(np.max(np.abs(g0 - g0.T))),
            "g_posdef": float(max(0.0, -eig.min())),
            "omega_antisym": float(np.max(np.abs(w0 + w0.T))),
            "compat": float(np.max(np.abs(w0 - np.einsum("ki,kj->ij", J0, g0)))),
            "domega": float(np.max(np.abs(cyc))),
            "det_omega": float(abs(np.linalg.det(w0))),
        }


# ---------------------------------------------------------------------------
# compatible triples and the Nijenhuis tensor
# ---------------------------------------------------------------------------

def build_compatible_triple(g_aux, omega, point=None):
    """J = -A (-A^2)^(-1/2) with A = g_aux^-1 omega, and g_compat(X, Y) = omega(X, J Y).

    ``point`` is accepted for interface symmetry; the inputs are component
    arrays already evaluated there.
    """
    g_aux = np.asarray(g_aux, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if abs(np.linalg.det(omega)) < DET_FLOOR:
        raise ManifoldError("omega is degenerate at the point (|det| < 1e-12)")
    if np.max(np.abs(omega + omega.T)) > 1e-12 * max(1.0, np.max(np.abs(omega))):
        raise ManifoldError("omega is not antisymmetric")
    try:
        L = np.linalg.cholesky(0.5 * (g_aux + g_aux.T))
    except np.linalg.LinAlgError:
        raise ManifoldError("auxiliary metric is not positive definite") from None
    Linv = np.linalg.inv(L)
    B = Linv @ omega @ Linv.T  # A = g^-1 omega expressed in a g-orthonormal basis
    S = B.T @ B  # = -B^2, symmetric positive semidefinite
    lam, V = np.linalg.eigh(0.5 * (S + S.T))
    if lam.min() < EIG_FLOOR:
        raise ManifoldError("-A^2 has an eigenvalue below the floor 1e-12")
    inv_sqrt = (V / np.sqrt(lam)) @ V.T
    JB = -B @ inv_sqrt
    J = Linv.T @ JB @ L.T
    g_compat = np.einsum("ik,kj->ij", omega, J)
    return J, 0.5 * (g_compat + g_compat.T)


def compatible_triple_jet(g_aux: Jet, omega: Jet, iterations: int = 60, tol: float = 1e-15):
    """Jet version of :func:`build_compatible_triple` via the Newton sign iteration.

    X <- (X - X^-1)/2 started at -A converges to the same J; this is an
    independent route to the eigendecomposition formula.
    """
    A = jmatmul(jinv(g_aux), omega)
    X = -A
    for _ in range(iterations):
        Xn = (X - jinv(X)) * 0.5
        done = np.max(np.abs(Xn.c - X.c)) < tol
        X = Xn
        if done:
            break
    g_compat = jmatmul(omega, X)
    return X, (g_compat + g_compat.swapaxes(-1, -2)) * 0.5


def nijenhuis_from_jet(J: Jet) -> np.ndarray:
    """N^i_jk from a jet of J^i_j (order >= 1).

    N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y] in components.
    """
    J0 = J.value
    dJ = J.grad()  # dJ[i, j, l] = d_l J^i_j
    t1 = np.einsum("lj,ikl->ijk", J0, dJ)
    t2 = np.einsum("lk,ijl->ijk", J0, dJ)
    t3 = np.einsum("il,ljk->ijk", J0, dJ)
    t4 = np.einsum("il,lkj->ijk", J0, dJ)
    return t1 - t2 + t3 - t4


def nijenhuis_tensor(manifold: ChartedManifold, point, J_label: str = "J") -> np.ndarray:
    return nijenhuis_from_jet(field_jet(manifold, J_label, point, 1))
