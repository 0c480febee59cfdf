"""Hot inner loops: truncated Taylor products and Grassmann monomial products.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
version. The numba path is used when numba imports cleanly and the
environment variable ``AKBRST_DISABLE_NUMBA`` is unset (or "0").
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("AKBRST_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError("numba disabled by AKBRST_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAS_NUMBA = False


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# truncated Taylor product
#
# out[n, ic[p]] += a[n, ia[p]] * b[n, ib[p]]   for every pair p
# ---------------------------------------------------------------------------

def taylor_mul_numpy(a, b, ia, ib, starts):
    """Pure numpy product; pairs are pre-sorted by output index."""
    prod = a[..., ia] * b[..., ib]
    return np.add.reduceat(prod, starts, axis=-1)


if HAS_NUMBA:

    @njit(cache=True)
    def _taylor_mul_2d(a, b, ia, ib, ic, ncoef):
        n = a.shape[0]
        out = np.zeros((n, ncoef), dtype=a.dtype)
        for k in range(n):
            for p in range(ia.shape[0]):
                out[k, ic[p]] += a[k, ia[p]] * b[k, ib[p]]
        return out

    def taylor_mul_numba(a, b, ia, ib, ic, ncoef):
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        dtype = np.result_type(a.dtype, b.dtype)
        a2 = np.ascontiguousarray(np.broadcast_to(a, shape + a.shape[-1:]), dtype=dtype)
        b2 = np.ascontiguousarray(np.broadcast_to(b, shape + b.shape[-1:]), dtype=dtype)
        a2 = a2.reshape(-1, a.shape[-1])
        b2 = b2.reshape(-1, b.shape[-1])
        out = _taylor_mul_2d(a2, b2, ia, ib, ic, ncoef)
        return out.reshape(shape + (ncoef,))

else:
    taylor_mul_numba = None


def taylor_mul(a, b, table):
    """Dispatch a truncated product of two coefficient arrays."""
    if HAS_NUMBA:
        return taylor_mul_numba(a, b, table.ia, table.ib, table.ic, table.ncoef)
    return taylor_mul_numpy(a, b, table.ia, table.ib, table.starts)


# ---------------------------------------------------------------------------
# Grassmann monomial product on bitmasks
#
# Monomials are encoded as integer bitmasks over the generators.  The sign of
# m1 * m2 is (-1)^(number of pairs (i in m1, j in m2) with i > j).
# ---------------------------------------------------------------------------

def _popcount(x: int) -> int:
    return bin(x).count("1")


def grassmann_sign_scalar(m1: int, m2: int) -> int:
    if m1 & m2:
        return 0
    swaps = 0
    rest = m1
    while rest:
        low = rest & -rest
        # generators of m2 strictly below this generator of m1
        swaps += _popcount(m2 & (low - 1))
        rest ^= low
    return -1 if swaps & 1 else 1


if HAS_NUMBA:

    @njit(cache=True)
    def _grassmann_signs(left, right, out):
        for k in range(left.shape[0]):
            m1 = left[k]
            m2 = right[k]
            if m1 & m2:
                out[k] = 0
                continue
            swaps = 0
            rest = m1
            while rest:
                low = rest & -rest
                below = m2 & (low - 1)
                while below:
                    below &= below - 1
                    swaps += 1
                rest ^= low
            out[k] = -1 if swaps & 1 else 1
        return out


def _popcount_array(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


def grassmann_signs_numpy(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Vectorised over pairs: loop over generator bits instead of over monomials."""
    swaps = np.zeros_like(left)
    nbits = int(max(left.max(initial=0), right.max(initial=0))).bit_length()
    for i in range(nbits):
        has = (left >> i) & 1
        swaps += has * _popcount_array(right & ((1 << i) - 1))
    out = np.where(swaps & 1, -1, 1)
    out[(left & right) != 0] = 0
    return out


def grassmann_signs(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Vectorised product signs for paired bitmask arrays."""
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    if HAS_NUMBA:
        return _grassmann_signs(left, right, np.empty(left.shape[0], dtype=np.int64))
    return grassmann_signs_numpy(left, right)
