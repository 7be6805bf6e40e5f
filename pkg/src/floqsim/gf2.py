"""Small GF(2) helpers shared by the lattice and test oracles.

Vectors are either numpy uint8 arrays or Python ints used as bitsets
(bit ``i`` set <=> coordinate ``i`` is one).  The bitset form is what the
homology code uses, since Python ints give fast XOR on long vectors.
"""

from __future__ import annotations

import numpy as np


def rank(mat: np.ndarray) -> int:
    """Rank over GF(2) of a dense 0/1 matrix."""
    a = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivots = np.nonzero(a[r:, c])[0]
        if pivots.size == 0:
            continue
        piv = r + pivots[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        r += 1
    return r


def det(mat: np.ndarray) -> int:
    """Determinant mod 2 of a square 0/1 matrix."""
    a = np.asarray(mat)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("det needs a square matrix")
    return int(rank(a) == a.shape[0])


def solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """One solution x of ``mat @ x = rhs`` over GF(2) (free variables = 0).

    Returns ``None`` when the system is inconsistent.
    """
    a = np.asarray(mat, dtype=np.uint8) & 1
    b = np.asarray(rhs, dtype=np.uint8).reshape(-1, 1) & 1
    aug = np.concatenate([a, b], axis=1)
    rows, cols = a.shape
    pivcols = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(aug[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            aug[[r, piv]] = aug[[piv, r]]
        mask = aug[:, c].astype(bool)
        mask[r] = False
        aug[mask] ^= aug[r]
        pivcols.append(c)
        r += 1
    if np.any(aug[r:, -1]):
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for i, c in enumerate(pivcols):
        x[c] = aug[i, -1]
    return x


def bits(v: int) -> list[int]:
    """Indices of set bits of a Python-int bitset, ascending."""
    out = []
    while v:
        low = v & -v
        out.append(low.bit_length() - 1)
        v ^= low
    return out


def popcount(v: int) -> int:
    return bin(v).count("1")


class BitBasis:
    """Incremental echelon basis of bitset vectors.

    Each stored vector is keyed by its leading (highest) bit, and stored
    vectors are kept reduced against earlier pivots on insertion only, which
    is enough for membership testing.
    """

    def __init__(self) -> None:
        self._piv: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._piv)

    def reduce(self, v: int) -> int:
        piv = self._piv
        while v:
            h = v.bit_length() - 1
            w = piv.get(h)
            if w is None:
                return v
            v ^= w
        return 0

    def add(self, v: int) -> bool:
        """Insert ``v``; return True iff it was independent."""
        r = self.reduce(v)
        if r == 0:
            return False
        self._piv[r.bit_length() - 1] = r
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0
