"""Grassmann algebra.

Two representations live here.

``GrassmannElement`` is the small user-facing type: a mapping from ascending
generator tuples to scalar coefficients.

``SuperArray`` is the workhorse of the phase-space code: a tensor whose
entries are polynomials in odd generators with :class:`~akbrst.jets.Jet`
coefficients in the even coordinates.  Monomials are int64 bitmasks; the
coefficient of monomial ``masks[k]`` is ``coef[k]``.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ._kernels import grassmann_signs
from .jets import Jet, JetBasis, jeinsum

__all__ = ["GrassmannElement", "SuperArray", "popcount", "parity_of"]

MAX_GENERATORS = 62


def popcount(masks: np.ndarray) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


def parity_of(masks: np.ndarray) -> np.ndarray:
    return popcount(masks) & 1


def _below(masks: np.ndarray, bit: int) -> np.ndarray:
    return popcount(np.asarray(masks, dtype=np.int64) & ((1 << bit) - 1))


def _above(masks: np.ndarray, bit: int) -> np.ndarray:
    return popcount(np.asarray(masks, dtype=np.int64) >> (bit + 1))


# ---------------------------------------------------------------------------
# scalar-coefficient elements
# ---------------------------------------------------------------------------

class GrassmannElement:
    """Element of the exterior algebra on numbered generators."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        clean: dict[int, complex] = {}
        for key, val in (terms or {}).items():
            mask, sign = self._canonical(key)
            if sign == 0 or val == 0:
                continue
            clean[mask] = clean.get(mask, 0) + sign * val
        self.terms = {k: v for k, v in clean.items() if v != 0}

    @staticmethod
    def _canonical(key) -> tuple[int, int]:
        if isinstance(key, (int, np.integer)):
            return int(key), 1
        gens = list(key)
        if len(set(gens)) != len(gens):
            return 0, 0
        if any(g < 0 or g >= MAX_GENERATORS for g in gens):
            raise ValueError("generator index out of range")
        # bubble to ascending order, counting transpositions
        sign = 1
        for i in range(len(gens)):
            for j in range(len(gens) - 1 - i):
                if gens[j] > gens[j + 1]:
                    gens[j], gens[j + 1] = gens[j + 1], gens[j]
                    sign = -sign
        mask = 0
        for g in gens:
            mask |= 1 << g
        return mask, sign

    @classmethod
    def generator(cls, i: int) -> "GrassmannElement":
        return cls({(i,): 1.0})

    @classmethod
    def scalar(cls, value) -> "GrassmannElement":
        return cls({(): value})

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(i for i in range(MAX_GENERATORS) if m >> i & 1): v for m, v in sorted(self.terms.items())}

    @property
    def degrees(self) -> set[int]:
        return {bin(m).count("1") for m in self.terms}

    @property
    def parity(self) -> int | None:
        """0 or 1 for homogeneous elements, None for mixed ones."""
        ps = {d & 1 for d in self.degrees}
        return ps.pop() if len(ps) == 1 else (0 if not ps else None)

    def __add__(self, other):
        other = _as_element(other)
        out = dict(self.terms)
        for m, v in other.terms.items():
            out[m] = out.get(m, 0) + v
        return GrassmannElement(out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement({m: -v for m, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_element(other))

    def __rsub__(self, other):
        return _as_element(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return GrassmannElement({m: v * other for m, v in self.terms.items()})
        return product(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            other = _as_element(other)
        return self.terms == other.terms

    def isclose(self, other, tol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(v) <= tol for v in diff.terms.values())

    def left_derivative(self, i: int) -> "GrassmannElement":
        return left_derivative(i, self)

    def right_derivative(self, i: int) -> "GrassmannElement":
        bit = 1 << i
        out = {}
        for m, v in self.terms.items():
            if m & bit:
                sign = -1 if bin(m >> (i + 1)).count("1") & 1 else 1
                out[m ^ bit] = sign * v
        return GrassmannElement(out)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for gens, v in self.as_dict().items():
            name = "*".join(f"e{g}" for g in gens) or "1"
            parts.append(f"{v:g}*{name}")
        return " + ".join(parts)


def _as_element(x) -> GrassmannElement:
    if isinstance(x, GrassmannElement):
        return x
    return GrassmannElement.scalar(x)


def product(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    a, b = _as_element(a), _as_element(b)
    if not a.terms or not b.terms:
        return GrassmannElement()
    ma = np.array(list(a.terms), dtype=np.int64)
    mb = np.array(list(b.terms), dtype=np.int64)
    va = np.array(list(a.terms.values()))
    vb = np.array(list(b.terms.values()))
    L, R = np.meshgrid(np.arange(len(ma)), np.arange(len(mb)), indexing="ij")
    L, R = L.ravel(), R.ravel()
    signs = grassmann_signs(ma[L], mb[R])
    out: dict[int, complex] = {}
    for l, r, s in zip(L, R, signs):
        if s:
            key = int(ma[l] | mb[r])
            out[key] = out.get(key, 0) + s * va[l] * vb[r]
    return GrassmannElement(out)


def left_derivative(i: int, a: GrassmannElement) -> GrassmannElement:
    """d/d(e_i) acting from the left: move e_i to the front, then strip it."""
    bit = 1 << i
    out = {}
    for m, v in a.terms.items():
        if m & bit:
            sign = -1 if bin(m & (bit - 1)).count("1") & 1 else 1
            out[m ^ bit] = sign * v
    return GrassmannElement(out)


# ---------------------------------------------------------------------------
# jet-coefficient arrays
# ---------------------------------------------------------------------------

class SuperArray:
    """Tensor of superfunctions: sum_k masks[k] (monomial) * coef[k] (jet tensor)."""

    __slots__ = ("masks", "coef")

    def __init__(self, masks, coef: Jet):
        self.masks = np.asarray(masks, dtype=np.int64)
        if coef.shape[:1] != self.masks.shape:
            raise ValueError("coefficient leading axis must match the monomial list")
        self.coef = coef

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, shape, basis: JetBasis, dtype=complex) -> "SuperArray":
        return cls(np.zeros(0, np.int64), Jet(np.zeros((0,) + tuple(shape) + (basis.ncoef,), dtype), basis))

    @classmethod
    def even(cls, jet: Jet) -> "SuperArray":
        return cls(np.zeros(1, np.int64), Jet(jet.c[None], jet.basis))

    @classmethod
    def monomial(cls, mask: int, jet: Jet) -> "SuperArray":
        return cls(np.array([mask], np.int64), Jet(jet.c[None], jet.basis))

    @classmethod
    def generators(cls, bits, basis: JetBasis, dtype=complex) -> "SuperArray":
        """Vector whose k-th entry is the generator numbered bits[k]."""
        n = len(bits)
        c = np.zeros((n, n, basis.ncoef), dtype)
        c[np.arange(n), np.arange(n), 0] = 1.0
        return cls(np.array([1 << b for b in bits], np.int64), Jet(c, basis)).combine()

    # basic properties -------------------------------------------------------
    @property
    def shape(self):
        return self.coef.shape[1:]

    @property
    def basis(self) -> JetBasis:
        return self.coef.basis

    @property
    def order(self) -> int:
        return self.coef.order

    @property
    def nterms(self) -> int:
        return len(self.masks)

    def parities(self) -> np.ndarray:
        return parity_of(self.masks)

    def degrees(self) -> np.ndarray:
        return popcount(self.masks)

    # normalisation -------------------------------------------------------------
    def combine(self, tol: float = 0.0) -> "SuperArray":
        if self.nterms == 0:
            return self
        uniq, inv = np.unique(self.masks, return_inverse=True)
        c = self.coef.c
        if len(uniq) != len(self.masks):
            acc = np.zeros((len(uniq),) + c.shape[1:], dtype=c.dtype)
            np.add.at(acc, inv, c)
            c = acc
        else:
            order = np.argsort(self.masks, kind="stable")
            c = c[order]
        flat = np.abs(c.reshape(len(uniq), -1))
        keep = flat.max(axis=1, initial=0.0) > tol if flat.shape[1] else np.zeros(len(uniq), bool)
        return SuperArray(uniq[keep], Jet(c[keep], self.basis))

    def truncate(self, order: int) -> "SuperArray":
        return SuperArray(self.masks, self.coef.truncate(order))

    def astype(self, dtype) -> "SuperArray":
        return SuperArray(self.masks, self.coef.astype(dtype))

    # arithmetic ------------------------------------------------------------------
    def _aligned(self, other: "SuperArray"):
        order = min(self.order, other.order)
        a = self if self.order == order else self.truncate(order)
        b = other if other.order == order else other.truncate(order)
        return a, b

    def __add__(self, other: "SuperArray") -> "SuperArray":
        if not isinstance(other, SuperArray):
            return NotImplemented
        a, b = self._aligned(other)
        shape = np.broadcast_shapes(a.shape, b.shape)
        ca = np.broadcast_to(a.coef.c, (a.nterms,) + shape + (a.basis.ncoef,))
        cb = np.broadcast_to(b.coef.c, (b.nterms,) + shape + (b.basis.ncoef,))
        dtype = np.result_type(ca.dtype, cb.dtype)
        c = np.concatenate([ca.astype(dtype), cb.astype(dtype)])
        return SuperArray(np.concatenate([a.masks, b.masks]), Jet(c, a.basis)).combine()

    def __neg__(self) -> "SuperArray":
        return SuperArray(self.masks, -self.coef)

    def __sub__(self, other: "SuperArray") -> "SuperArray":
        return self + (-other)

    def scale(self, factor) -> "SuperArray":
        """Multiply every coefficient by an even quantity (number, array or Jet; broadcast on the tensor axes)."""
        if isinstance(factor, Jet):
            f = Jet(factor.c[None], factor.basis)
            return SuperArray(self.masks, self.coef * f)
        f = np.asarray(factor)
        return SuperArray(self.masks, self.coef * f[None] if f.ndim else self.coef * f)

    def __mul__(self, factor):
        if isinstance(factor, SuperArray):
            raise TypeError("use sprod for super products")
        return self.scale(factor)

    __rmul__ = __mul__

    # tensor reshaping -----------------------------------------------------------
    def __getitem__(self, idx) -> "SuperArray":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return SuperArray(self.masks, self.coef[(slice(None),) + idx])

    def transpose(self, *axes) -> "SuperArray":
        return SuperArray(self.masks, self.coef.transpose(0, *[a + 1 for a in axes]))

    def reshape(self, *shape) -> "SuperArray":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return SuperArray(self.masks, self.coef.reshape(self.nterms, *shape))

    def split_parity(self) -> tuple["SuperArray", "SuperArray"]:
        p = self.parities()
        return self._select(p == 0), self._select(p == 1)

    def _select(self, keep) -> "SuperArray":
        return SuperArray(self.masks[keep], Jet(self.coef.c[keep], self.basis))

    def degree_part(self, k: int) -> "SuperArray":
        return self._select(self.degrees() == k)

    def max_degree(self) -> int:
        return int(self.degrees().max(initial=0))

    # derivatives --------------------------------------------------------------------
    def even_deriv(self, v: int) -> "SuperArray":
        return SuperArray(self.masks, self.coef.deriv(v))

    def odd_left_deriv(self, bit: int) -> "SuperArray":
        has = (self.masks >> bit) & 1 == 1
        sub = self._select(has)
        sign = np.where(_below(sub.masks, bit) & 1, -1.0, 1.0)
        c = sub.coef.c * sign.reshape((-1,) + (1,) * (sub.coef.c.ndim - 1))
        return SuperArray(sub.masks ^ (1 << bit), Jet(c, sub.basis)).combine()

    def odd_right_deriv(self, bit: int) -> "SuperArray":
        has = (self.masks >> bit) & 1 == 1
        sub = self._select(has)
        sign = np.where(_above(sub.masks, bit) & 1, -1.0, 1.0)
        c = sub.coef.c * sign.reshape((-1,) + (1,) * (sub.coef.c.ndim - 1))
        return SuperArray(sub.masks ^ (1 << bit), Jet(c, sub.basis)).combine()

    # evaluation ---------------------------------------------------------------------
    def values(self) -> dict[int, np.ndarray]:
        return {int(m): self.coef.c[k, ..., 0] for k, m in enumerate(self.masks)}

    def max_abs(self) -> float:
        if self.nterms == 0:
            return 0.0
        return float(np.max(np.abs(self.coef.c[..., 0]), initial=0.0))

    def worst_monomial(self) -> tuple[int, float]:
        if self.nterms == 0:
            return 0, 0.0
        per = np.abs(self.coef.c[..., 0]).reshape(self.nterms, -1).max(axis=1, initial=0.0)
        k = int(np.argmax(per))
        return int(self.masks[k]), float(per[k])

    def __repr__(self) -> str:
        return f"SuperArray(shape={self.shape}, terms={self.nterms}, order={self.order})"


def sprod(subscripts: str, a: SuperArray, b: SuperArray) -> SuperArray:
    """Grassmann product a*b with the tensor axes combined by einsum ``subscripts`` (lowercase labels)."""
    a, b = a._aligned(b)
    lhs, out = subscripts.split("->")
    la, lb = lhs.split(",")
    if a.nterms == 0 or b.nterms == 0:
        probe = jeinsum(f"{la},{lb}->{out}", a.coef[0] if a.nterms else Jet(np.zeros(a.shape + (a.basis.ncoef,)), a.basis),
                        b.coef[0] if b.nterms else Jet(np.zeros(b.shape + (b.basis.ncoef,)), b.basis))
        return SuperArray.zeros(probe.shape, a.basis, np.result_type(a.coef.dtype, b.coef.dtype))
    L, R = np.meshgrid(np.arange(a.nterms), np.arange(b.nterms), indexing="ij")
    L, R = L.ravel(), R.ravel()
    disjoint = (a.masks[L] & b.masks[R]) == 0
    L, R = L[disjoint], R[disjoint]
    if len(L) == 0:
        probe = jeinsum(f"{la},{lb}->{out}", a.coef[0], b.coef[0])
        return SuperArray.zeros(probe.shape, a.basis, probe.dtype)
    signs = grassmann_signs(a.masks[L], b.masks[R]).astype(float)
    ca = Jet(a.coef.c[L] * signs.reshape((-1,) + (1,) * (a.coef.c.ndim - 1)), a.basis)
    cb = Jet(b.coef.c[R], b.basis)
    c = jeinsum(f"q{la},q{lb}->q{out}", ca, cb)
    return SuperArray(a.masks[L] | b.masks[R], c).combine()
