"""Truncated multivariate Taylor polynomials ("jets").

A jet stores the Taylor coefficients of a tensor-valued function around a
point, in ``nvars`` variables up to total degree ``order``.  Monomials are
sorted by degree, so lowering the order is a prefix slice of the last axis.
Differentiation lowers the order by one, which keeps every stored
coefficient exact (up to rounding).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernels

__all__ = [
    "JetBasis",
    "Jet",
    "get_basis",
    "jeinsum",
    "jmatmul",
    "jinv",
    "jexpm",
    "jstack",
    "jconcat",
    "jarray",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "power",
    "value_of",
]


@dataclass(frozen=True, eq=False)
class JetBasis:
    nvars: int
    order: int
    monos: tuple = field(repr=False)
    index: dict = field(repr=False)
    degree: np.ndarray = field(repr=False)
    ia: np.ndarray = field(repr=False)
    ib: np.ndarray = field(repr=False)
    ic: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)

    @property
    def ncoef(self) -> int:
        return len(self.monos)

    def size_at(self, order: int) -> int:
        """Number of monomials of degree <= order."""
        return math.comb(self.nvars + order, order)

    def unit(self, v: int) -> int:
        e = [0] * self.nvars
        e[v] = 1
        return self.index[tuple(e)]

    def deriv_table(self, v: int):
        return _deriv_table(self.nvars, self.order, v)


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return out


@lru_cache(maxsize=None)
def get_basis(nvars: int, order: int) -> JetBasis:
    if nvars < 1 or order < 0:
        raise ValueError("need nvars >= 1 and order >= 0")
    monos = _monomials(nvars, order)
    index = {m: k for k, m in enumerate(monos)}
    degree = np.array([sum(m) for m in monos], dtype=np.int64)
    ia, ib, ic = [], [], []
    for i, mi in enumerate(monos):
        for j, mj in enumerate(monos):
            if degree[i] + degree[j] > order:
                continue
            ia.append(i)
            ib.append(j)
            ic.append(index[tuple(x + y for x, y in zip(mi, mj))])
    ia = np.array(ia, dtype=np.int64)
    ib = np.array(ib, dtype=np.int64)
    ic = np.array(ic, dtype=np.int64)
    perm = np.argsort(ic, kind="stable")
    ia, ib, ic = ia[perm], ib[perm], ic[perm]
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
    return JetBasis(nvars, order, tuple(monos), index, degree, ia, ib, ic, starts)


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, v: int):
    src = get_basis(nvars, order)
    dst = get_basis(nvars, order - 1)
    s, d, f = [], [], []
    for k, m in enumerate(src.monos):
        if m[v] == 0:
            continue
        e = list(m)
        e[v] -= 1
        s.append(k)
        d.append(dst.index[tuple(e)])
        f.append(m[v])
    return np.array(s), np.array(d), np.array(f, dtype=float)


@lru_cache(maxsize=None)
def _embed_table(nsrc: int, osrc: int, ndst: int, odst: int, var_map: tuple):
    src = get_basis(nsrc, osrc)
    dst = get_basis(ndst, odst)
    s, d = [], []
    for k, m in enumerate(src.monos):
        if sum(m) > odst:
            continue
        e = [0] * ndst
        for v, p in enumerate(m):
            e[var_map[v]] += p
        s.append(k)
        d.append(dst.index[tuple(e)])
    return np.array(s, dtype=np.int64), np.array(d, dtype=np.int64)


def _align(a: "Jet", b: "Jet"):
    if a.basis.nvars != b.basis.nvars:
        raise ValueError("jets over different variable sets")
    if a.basis.order == b.basis.order:
        return a.c, b.c, a.basis
    o = min(a.basis.order, b.basis.order)
    basis = get_basis(a.basis.nvars, o)
    n = basis.ncoef
    return a.c[..., :n], b.c[..., :n], basis


class Jet:
    """Tensor of truncated Taylor polynomials; coefficients on the last axis."""

    __slots__ = ("c", "basis")
    __array_priority__ = 1000

    def __init__(self, c, basis: JetBasis):
        c = np.asarray(c)
        if c.shape[-1:] != (basis.ncoef,):
            raise ValueError(f"coefficient axis {c.shape[-1:]} does not match basis ({basis.ncoef})")
        self.c = c
        self.basis = basis

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, basis: JetBasis) -> "Jet":
        value = np.asarray(value)
        dtype = np.result_type(value.dtype, float)
        c = np.zeros(value.shape + (basis.ncoef,), dtype=dtype)
        c[..., 0] = value
        return cls(c, basis)

    @classmethod
    def variables(cls, point: Sequence[float], basis: JetBasis) -> "Jet":
        """The coordinate functions themselves, expanded at ``point``."""
        point = np.asarray(point, dtype=float)
        if point.shape != (basis.nvars,):
            raise ValueError("point dimension does not match basis")
        c = np.zeros((basis.nvars, basis.ncoef))
        c[:, 0] = point
        if basis.order >= 1:
            for v in range(basis.nvars):
                c[v, basis.unit(v)] = 1.0
        return cls(c, basis)

    # basic properties -----------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def dtype(self):
        return self.c.dtype

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    def grad(self) -> np.ndarray:
        """First derivatives, trailing axis indexes the variable."""
        if self.order < 1:
            raise ValueError("order-0 jet has no gradient")
        idx = [self.basis.unit(v) for v in range(self.basis.nvars)]
        return self.c[..., idx]

    def deriv(self, v: int) -> "Jet":
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        s, d, f = self.basis.deriv_table(v)
        lower = get_basis(self.basis.nvars, self.order - 1)
        out = np.zeros(self.shape + (lower.ncoef,), dtype=self.dtype)
        out[..., d] = self.c[..., s] * f
        return Jet(out, lower)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        basis = get_basis(self.basis.nvars, order)
        return Jet(self.c[..., : basis.ncoef], basis)

    def embed(self, basis: JetBasis, var_map: Sequence[int]) -> "Jet":
        """Re-express in a larger variable set; ``var_map[v]`` is the new slot of variable ``v``."""
        s, d = _embed_table(self.basis.nvars, self.order, basis.nvars, basis.order, tuple(var_map))
        if basis.order > self.order:
            raise ValueError("embedding cannot raise the order")
        out = np.zeros(self.shape + (basis.ncoef,), dtype=self.dtype)
        out[..., d] = self.c[..., s]
        return Jet(out, basis)

    # shape manipulation ---------------------------------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        return Jet(self.c[idx], self.basis)

    def __setitem__(self, idx, other):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if isinstance(other, Jet):
            a, b, basis = _align(self, other)
            if basis is not self.basis:
                raise ValueError("cannot assign a lower-order jet")
            self.c[idx] = b
        else:
            self.c[idx] = 0
            self.c[idx + (Ellipsis, 0)] = other

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(tuple(shape) + (self.basis.ncoef,)), self.basis)

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet(self.c.transpose(tuple(axes) + (self.ndim,)), self.basis)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def swapaxes(self, a: int, b: int) -> "Jet":
        a, b = a % self.ndim, b % self.ndim
        return Jet(np.swapaxes(self.c, a, b), self.basis)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % self.ndim for a in axes)
        return Jet(self.c.sum(axis=axes), self.basis)

    def copy(self) -> "Jet":
        return Jet(self.c.copy(), self.basis)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.c), self.basis)

    @property
    def real(self) -> "Jet":
        return Jet(self.c.real.copy(), self.basis)

    @property
    def imag(self) -> "Jet":
        return Jet(self.c.imag.copy(), self.basis)

    def astype(self, dtype) -> "Jet":
        return Jet(self.c.astype(dtype), self.basis)

    # arithmetic ---------------------------------------------------------------
    def _const_add(self, other, sign: float = 1.0) -> "Jet":
        other = np.asarray(other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        dtype = np.result_type(self.dtype, other.dtype)
        out = np.array(np.broadcast_to(self.c, shape + (self.basis.ncoef,)), dtype=dtype)
        if sign < 0:
            out = -out
        out[..., 0] += other
        return Jet(out, self.basis)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, basis = _align(self, other)
            return Jet(a + b, basis)
        return self._const_add(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b, basis = _align(self, other)
            return Jet(a - b, basis)
        return self._const_add(-np.asarray(other))

    def __rsub__(self, other):
        return self._const_add(other, sign=-1.0)

    def __neg__(self):
        return Jet(-self.c, self.basis)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, basis = _align(self, other)
            return Jet(_kernels.taylor_mul(a, b, basis), basis)
        other = np.asarray(other)
        return Jet(self.c * other[..., None], self.basis)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other)
        return Jet(self.c / other[..., None], self.basis)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            result = Jet.constant(np.ones(self.shape, dtype=self.dtype), self.basis)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        return power(self, float(n))

    def reciprocal(self) -> "Jet":
        return power(self, -1.0)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.basis.nvars}, order={self.order})"


# ---------------------------------------------------------------------------
# composition with scalar functions
# ---------------------------------------------------------------------------

def _compose(x: Jet, derivs: list[np.ndarray]) -> Jet:
    """sum_k f^(k)(x0)/k! (x - x0)^k, evaluated with Horner's scheme."""
    h = x.copy()
    h.c[..., 0] = 0
    order = x.order
    result = Jet.constant(derivs[order] / math.factorial(order), x.basis)
    for k in range(order - 1, -1, -1):
        result = result * h + derivs[k] / math.factorial(k)
    return result


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [s, c, -s, -c]
    return _compose(x, [cyc[k % 4] for k in range(x.order + 1)])


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [c, -s, -c, s]
    return _compose(x, [cyc[k % 4] for k in range(x.order + 1)])


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return _compose(x, [e] * (x.order + 1))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    x0 = x.value
    derivs = [np.log(x0)]
    for k in range(1, x.order + 1):
        derivs.append((-1.0) ** (k - 1) * math.factorial(k - 1) / x0**k)
    return _compose(x, derivs)


def power(x, a: float):
    if not isinstance(x, Jet):
        return np.power(x, a)
    x0 = x.value
    derivs = []
    coef = 1.0
    for k in range(x.order + 1):
        derivs.append(coef * np.power(x0, a - k))
        coef *= a - k
    return _compose(x, derivs)


def sqrt(x):
    return power(x, 0.5) if isinstance(x, Jet) else np.sqrt(x)


# ---------------------------------------------------------------------------
# tensor algebra
# ---------------------------------------------------------------------------

_SPARE = "ZYXWVUTSRQPONMLKJIHGFEDCBA"


def _pair_product(l1, c1, l2, c2, kept, basis, pair_label, coef_label):
    prod = np.einsum(
        f"{l1}{pair_label},{l2}{pair_label}->{kept}{pair_label}",
        c1[..., basis.ia],
        c2[..., basis.ib],
        optimize=c1.size * c2.size > 1_000_000,
    )
    return np.add.reduceat(prod, basis.starts, axis=-1)


def jeinsum(subscripts: str, *operands):
    """``np.einsum`` where any operand may be a :class:`Jet`."""
    if "->" not in subscripts:
        raise ValueError("jeinsum needs an explicit output ('->')")
    lhs, out = subscripts.replace(" ", "").split("->")
    labels = lhs.split(",")
    if len(labels) != len(operands):
        raise ValueError("operand count does not match subscripts")
    jets = [op for op in operands if isinstance(op, Jet)]
    if not jets:
        return np.einsum(subscripts, *operands, optimize=len(operands) > 2)
    spare = [ch for ch in _SPARE if ch not in subscripts]
    pair_label, coef_label = spare[0], spare[1]

    order = min(j.order for j in jets)
    basis = get_basis(jets[0].basis.nvars, order)
    n = basis.ncoef
    items = []
    for lab, op in zip(labels, operands):
        if isinstance(op, Jet):
            if op.basis.nvars != basis.nvars:
                raise ValueError("jets over different variable sets")
            items.append((lab, op.c[..., :n], True))
        else:
            items.append((lab, np.asarray(op), False))

    while sum(1 for it in items if it[2]) > 1:
        k1, k2 = [k for k, it in enumerate(items) if it[2]][:2]
        l1, c1, _ = items[k1]
        l2, c2, _ = items[k2]
        others = "".join(it[0] for k, it in enumerate(items) if k not in (k1, k2)) + out
        kept = []
        for ch in l1.replace("...", "") + l2.replace("...", ""):
            if ch in others and ch not in kept:
                kept.append(ch)
        kept = ("..." if "..." in l1 or "..." in l2 else "") + "".join(kept)
        c = _pair_product(l1, c1, l2, c2, kept, basis, pair_label, coef_label)
        items = [it for k, it in enumerate(items) if k not in (k1, k2)] + [(kept, c, True)]

    spec = ",".join(it[0] + (coef_label if it[2] else "") for it in items)
    res = np.einsum(f"{spec}->{out}{coef_label}", *[it[1] for it in items], optimize=len(items) > 2)
    return Jet(res, basis)


def jmatmul(a, b):
    """Matrix product over the last two axes (vectors allowed on either side)."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.matmul(a, b)
    na = a.ndim if isinstance(a, Jet) else np.ndim(a)
    nb = b.ndim if isinstance(b, Jet) else np.ndim(b)
    if na == 1 and nb == 1:
        return jeinsum("i,i->", a, b)
    if na == 1:
        return jeinsum("i,...ij->...j", a, b)
    if nb == 1:
        return jeinsum("...ij,j->...i", a, b)
    return jeinsum("...ij,...jk->...ik", a, b)


def jinv(a):
    """Inverse of a jet-valued square matrix (Neumann series about the value)."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    nil = a - a.value
    m = -jmatmul(a0inv, nil)
    term = Jet.constant(a0inv, a.basis)
    total = term
    for _ in range(a.order):
        term = jmatmul(m, term)
        total = total + term
    return total


def jexpm(a: Jet) -> Jet:
    """Matrix exponential of a jet-valued matrix that vanishes at the expansion point."""
    if np.max(np.abs(a.value), initial=0.0) > 0:
        raise ValueError("jexpm expects a matrix with zero value at the point")
    n = a.shape[-1]
    eye = Jet.constant(np.broadcast_to(np.eye(n), a.shape).astype(a.dtype), a.basis)
    total = eye
    term = eye
    for k in range(1, a.order + 1):
        term = jmatmul(term, a) / k
        total = total + term
    return total


def jstack(items: Sequence, axis: int = 0) -> Jet:
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack([np.asarray(it) for it in items], axis=axis)
    order = min(j.order for j in jets)
    basis = get_basis(jets[0].basis.nvars, order)
    arrs = []
    for it in items:
        if isinstance(it, Jet):
            arrs.append(it.c[..., : basis.ncoef])
        else:
            arrs.append(Jet.constant(it, basis).c)
    dtype = np.result_type(*arrs)
    arrs = [np.asarray(a, dtype=dtype) for a in arrs]
    ax = axis if axis >= 0 else axis - 1
    return Jet(np.stack(arrs, axis=ax), basis)


def jconcat(items: Sequence, axis: int = 0) -> Jet:
    jets = [it for it in items if isinstance(it, Jet)]
    order = min(j.order for j in jets)
    basis = get_basis(jets[0].basis.nvars, order)
    arrs = [it.c[..., : basis.ncoef] if isinstance(it, Jet) else Jet.constant(it, basis).c for it in items]
    dtype = np.result_type(*arrs)
    ax = axis if axis >= 0 else axis - 1
    return Jet(np.concatenate([np.asarray(a, dtype=dtype) for a in arrs], axis=ax), basis)


def jarray(nested, basis: JetBasis | None = None) -> Jet:
    """Build a jet tensor from a nested list of jets and scalars."""
    if isinstance(nested, Jet):
        return nested
    if isinstance(nested, (list, tuple)):
        parts = [jarray(x, basis) for x in nested]
        if basis is None:
            jets = [p for p in parts if isinstance(p, Jet)]
            if not jets:
                return np.array(parts)
        return jstack(parts)
    if basis is not None:
        return Jet.constant(nested, basis)
    return np.asarray(nested)


def value_of(x):
    return x.value if isinstance(x, Jet) else np.asarray(x)
