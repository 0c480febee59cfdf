"""Vertical super differential forms on a local coordinate patch.

Sign conventions (Deligne rule, bidegree = (form degree, Grassmann parity)):

* coefficients sit to the right of differentials; ``dF = dz^K (d/dz^K F)`` with
  the left derivative;
* a 1-form is stored as components ``a[K]`` with ``a = dz^K a_K``;
* a 2-form uses ``rho = 1/2 dz^K dz^L rho[K, L]`` with
  ``rho[L, K] = -(-1)^(p_K p_L) rho[K, L]``;
* ``(X contracted with rho)_L = sum_M (-1)^(|X^M| p_L) X^M rho[M, L]`` for a vector field
  ``X = X^M d/dz^M`` (coefficients on the left);
* for a bivector, ``(X ^ Y) contracted with rho`` is ``Y`` contracted with (``X`` contracted with ``rho``);
* horizontal forms ``dx_alpha = d/dx^alpha contracted with d^2x`` ride along as a trailing tensor axis;
  vertical and horizontal degrees are independent gradings (a tensor product
  without cross signs), so ``d/dx^beta contracted with (sigma dx_alpha) = sigma M[beta, alpha]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grassmann import SuperArray, sprod
from .jets import Jet, JetBasis, get_basis

__all__ = [
    "SuperSpace",
    "HORIZONTAL_M",
    "d0",
    "d1",
    "contract_vector",
    "contract_one_form",
    "apply_derivation",
    "SolveResult",
    "solve_super_linear",
    "sstack",
    "bivector_images",
    "contract_bivector",
]

# d/dx^beta contracted with dx_alpha, dx_alpha := d/dx^alpha contracted with (dx^1 ^ dx^2)
HORIZONTAL_M = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass
class SuperSpace:
    """Named coordinates with parities; even ones are jet variables, odd ones Grassmann generators."""

    names: list[str]
    parity: np.ndarray
    slot: np.ndarray  # jet variable (even) or generator bit (odd)
    basis: JetBasis
    point: np.ndarray  # values of the even coordinates (complex allowed)
    groups: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, layout: list[tuple[str, int, int]], point, order: int) -> "SuperSpace":
        """``layout`` lists (group name, count, parity); even groups consume ``point`` in order."""
        names, par, slot, groups = [], [], [], {}
        ne = no = 0
        k = 0
        for gname, count, p in layout:
            idx = []
            for j in range(count):
                names.append(f"{gname}{j}")
                par.append(p)
                if p == 0:
                    slot.append(ne)
                    ne += 1
                else:
                    slot.append(no)
                    no += 1
                idx.append(k)
                k += 1
            groups[gname] = np.array(idx, dtype=int)
        point = np.asarray(point)
        if point.shape != (ne,):
            raise ValueError(f"expected {ne} even coordinates, got {point.shape}")
        return cls(names, np.array(par), np.array(slot), get_basis(ne, order), point, groups)

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def n_even(self) -> int:
        return self.basis.nvars

    def row_sign(self) -> np.ndarray:
        return np.where(self.parity == 1, -1.0, 1.0)

    def swap_sign(self) -> np.ndarray:
        return np.where(np.outer(self.parity, self.parity) == 1, -1.0, 1.0)

    def even_variables(self) -> Jet:
        b = self.basis
        c = np.zeros((b.nvars, b.ncoef), dtype=complex)
        c[:, 0] = self.point
        if b.order >= 1:
            for v in range(b.nvars):
                c[v, b.unit(v)] = 1.0
        return Jet(c, b)

    def coordinates(self, group: str) -> SuperArray:
        """The coordinate functions of one group as a vector SuperArray."""
        idx = self.groups[group]
        if self.parity[idx[0]] == 0:
            return SuperArray.even(self.even_variables()[self.slot[idx]])
        return SuperArray.generators([int(self.slot[k]) for k in idx], self.basis)

    def lift(self, jet: Jet, nvars_src: int | None = None) -> Jet:
        """Embed a jet in the first ``nvars_src`` even variables (the base point) into this basis."""
        nsrc = jet.basis.nvars if nvars_src is None else nvars_src
        order = min(jet.order, self.basis.order)
        target = get_basis(self.basis.nvars, order)
        j = jet if jet.order == order else jet.truncate(order)
        return j.astype(complex).embed(target, list(range(nsrc)))

    def scalar(self, value) -> SuperArray:
        return SuperArray.even(Jet.constant(np.asarray(value, dtype=complex), self.basis))


def sstack(items: list[SuperArray]) -> SuperArray:
    """Stack SuperArrays of equal tensor shape along a new leading axis."""
    n = len(items)
    order = min(it.order for it in items)
    items = [it if it.order == order else it.truncate(order) for it in items]
    basis = items[0].basis
    shape = items[0].shape
    dtype = np.result_type(*[it.coef.dtype for it in items])
    masks, coefs = [], []
    for k, it in enumerate(items):
        if it.nterms == 0:
            continue
        c = np.zeros((it.nterms, n) + tuple(shape) + (basis.ncoef,), dtype=dtype)
        c[:, k] = it.coef.c
        masks.append(it.masks)
        coefs.append(c)
    if not masks:
        return SuperArray.zeros((n,) + tuple(shape), basis, dtype)
    return SuperArray(np.concatenate(masks), Jet(np.concatenate(coefs), basis)).combine()


def d0(space: SuperSpace, F: SuperArray) -> SuperArray:
    """Left-derivative gradient: result[K, ...] = d/dz^K F (order drops by one)."""
    out = []
    target = F.order - 1
    for K in range(space.dim):
        if space.parity[K] == 0:
            out.append(F.even_deriv(int(space.slot[K])))
        else:
            out.append(F.odd_left_deriv(int(space.slot[K])).truncate(target))
    return sstack(out)


def _letters(n: int, skip: str = "") -> str:
    pool = [ch for ch in "abcdefghijklmnoprstuvwxyz" if ch not in skip]
    return "".join(pool[:n])


def d1(space: SuperSpace, a: SuperArray) -> SuperArray:
    """Exterior derivative of a 1-form a[K, ...] as a 2-form rho[K, L, ...]."""
    dA = d0(space, a)  # [L, K, ...] = d_L a_K
    nd = len(a.shape) - 1
    S = -dA.transpose(1, 0, *range(2, 2 + nd))
    P = space.swap_sign().reshape(space.dim, space.dim, *([1] * nd))
    ST = S.transpose(1, 0, *range(2, 2 + nd)).scale(P)
    return S - ST


def contract_vector(space: SuperSpace, X: SuperArray, rho: SuperArray) -> SuperArray:
    """X (shape (N,)) contracted with a 2-form rho[M, L, ...]; returns a 1-form [L, ...]."""
    nd = len(rho.shape) - 2
    rest = _letters(nd, "ml")
    sub = f"m,ml{rest}->l{rest}"
    Xe, Xo = X.split_parity()
    sign = space.row_sign().reshape(1, space.dim, *([1] * nd))
    return sprod(sub, Xe, rho) + sprod(sub, Xo, rho.scale(sign))


def contract_one_form(X: SuperArray, a: SuperArray) -> SuperArray:
    """X (shape (N,)) contracted with a 1-form a[M, ...]."""
    nd = len(a.shape) - 1
    rest = _letters(nd, "m")
    return sprod(f"m,m{rest}->{rest}", X, a)


def apply_derivation(space: SuperSpace, G: SuperArray, V: SuperArray) -> SuperArray:
    """Right derivation: sum_K (G d<-/dz^K) V^K."""
    nd = len(G.shape)
    rest = _letters(nd)
    dGs, VKs = [], []
    for K in range(space.dim):
        VK = V[K]
        if VK.nterms == 0:
            continue
        if space.parity[K] == 0:
            dG = G.even_deriv(int(space.slot[K]))
        else:
            dG = G.odd_right_deriv(int(space.slot[K]))
        if dG.nterms == 0:
            continue
        dGs.append(dG)
        VKs.append(VK)
    if not dGs:
        return SuperArray.zeros(G.shape, get_basis(space.n_even, max(G.order - 1, 0)))
    # one batched product over the contributing directions
    return sprod(f"k{rest},k->{rest}", sstack(dGs), sstack(VKs))


def bivector_images(space: SuperSpace, omega: SuperArray, basis: list) -> SuperArray:
    """G[j, L]: (d/dx^h ^ d/dz^K) contracted with omega for each (h, K) in ``basis``."""
    rows = []
    for hvec, K in basis:
        Mh = space.scalar(np.asarray(hvec) @ HORIZONTAL_M).truncate(omega.order)
        rows.append(sprod("la,a->l", omega[K], Mh))
    return sstack(rows)


def contract_bivector(space: SuperSpace, coeffs: SuperArray, basis: list, form: SuperArray) -> SuperArray:
    """sum_j c_j (d/dx^h ^ d/dz^K) contracted with (sigma_K dx_alpha) = sum_j c_j M_h[alpha] sigma[K, alpha]."""
    rows = []
    for hvec, K in basis:
        Mh = space.scalar(np.asarray(hvec) @ HORIZONTAL_M).truncate(form.order)
        rows.append(sprod("a,a->", form[K], Mh))
    return sprod("j,j->", coeffs, sstack(rows))


@dataclass
class SolveResult:
    coeffs: SuperArray  # shape (nbasis,)
    residual_strong: float
    residual_weak: float
    worst_monomial: int
    rank: int


def solve_super_linear(G: SuperArray, rhs: SuperArray, row_parity: np.ndarray,
                       keep_rows: np.ndarray | None = None, max_degree: int | None = None,
                       rcond: float = 1e-10) -> SolveResult:
    """Solve sum_j c_j * G_j = rhs for superfunctions c_j, monomial degree by degree.

    ``G`` has shape (nbasis, *rows); the product c_j * G_j carries the sign
    (-1)^(|c_j| p_row) with ``row_parity`` broadcast over the row axes.  Only
    values at the base point are solved for.  ``keep_rows`` (boolean over
    the flattened rows) selects the equations used by the least-squares step;
    the strong residual is always measured on every row.
    """
    G = G.truncate(0)
    rhs = rhs.truncate(0)
    nb = G.shape[0]
    rows = int(np.prod(G.shape[1:]))
    rp = np.broadcast_to(row_parity, G.shape[1:]).reshape(rows)
    rsign = np.where(rp == 1, -1.0, 1.0)
    keep = np.ones(rows, bool) if keep_rows is None else np.asarray(keep_rows, bool).reshape(rows)
    G0 = G.degree_part(0)
    mat = (G0.coef.c[0, ..., 0].reshape(nb, rows) if G0.nterms else np.zeros((nb, rows))).T
    pinv = np.linalg.pinv(mat[keep], rcond=rcond)
    rank = int(np.linalg.matrix_rank(mat[keep], tol=rcond * max(1.0, np.abs(mat).max(initial=0.0))))
    basis = G.basis
    if max_degree is None:
        max_degree = max(rhs.max_degree(), 0) + max(G.max_degree(), 0) + 1
    coeffs = SuperArray.zeros((nb,), basis)
    row_shape = G.shape[1:]
    sgn = rsign.reshape(row_shape)

    def apply(c: SuperArray) -> SuperArray:
        ce, co = c.split_parity()
        letters = _letters(len(row_shape), "j")
        sub = f"j,j{letters}->{letters}"
        return sprod(sub, ce, G) + sprod(sub, co, G.scale(sgn[None]))

    for deg in range(max_degree + 1):
        lhs = apply(coeffs) if coeffs.nterms else SuperArray.zeros(row_shape, basis)
        res = (rhs - lhs).degree_part(deg)
        if res.nterms == 0:
            continue
        r = res.coef.c[..., 0].reshape(res.nterms, rows)
        par = res.parities()
        sol = np.empty((res.nterms, nb), dtype=complex)
        for k in range(res.nterms):
            vec = r[k] * (rsign if par[k] else 1.0)
            sol[k] = pinv @ vec[keep]
        new = SuperArray(res.masks, Jet(sol[..., None], basis))
        coeffs = (coeffs + new) if coeffs.nterms else new.combine()
    final = (apply(coeffs) - rhs) if coeffs.nterms else (-rhs)
    vals = final.coef.c[..., 0].reshape(final.nterms, rows) if final.nterms else np.zeros((0, rows))
    strong = float(np.abs(vals).max(initial=0.0))
    weak = float(np.abs(vals[:, keep]).max(initial=0.0))
    wm, _ = final.worst_monomial()
    return SolveResult(coeffs, strong, weak, wm, rank)
