"""Belief propagation (scaled min-sum) with ordered-statistics post-processing.

BP runs on the detector/mechanism bipartite graph with prior LLRs
``log((1-p)/p)``.  If its hard decision reproduces the syndrome it is
returned.  Otherwise OSD sorts mechanisms by posterior LLR (most likely
flipped first), selects the first independent columns as an information
set by GF(2) elimination, and solves for the syndrome with every other
mechanism off (OSD-0).  Higher orders sweep test patterns over the
non-pivot mechanisms (see ``BpOsdDecoder``) and keep the candidate with
the highest prior likelihood.

The elimination works on packed ``uint64`` column vectors.  A pivot is the
highest set row bit, and each basis vector carries a tag recording which
selected columns it combines.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from ..dem import DetectorErrorModel
from .base import Correction, UndecodableSyndromeError, as_syndrome

DEFAULT_MAX_ITERS = 30
DEFAULT_SCALING = 0.9


@njit(cache=True)
def _bp(s, llr0, col_ptr, col_rows, row_ptr, row_edges, edge_var, max_iters, alpha, q, r, post, hard):
    """Scaled min-sum.  Returns (iterations used, converged)."""
    N = llr0.shape[0]
    m = row_ptr.shape[0] - 1
    nonzero = False
    for c in range(m):
        if s[c]:
            nonzero = True
            break
    for j in range(N):
        post[j] = llr0[j]
        hard[j] = llr0[j] < 0
        for e in range(col_ptr[j], col_ptr[j + 1]):
            q[e] = llr0[j]
    if not nonzero:
        ok = True
        for j in range(N):
            if hard[j]:
                ok = False
                break
        if ok:
            return 0, True
    for it in range(1, max_iters + 1):
        for c in range(m):
            sgn = -1.0 if s[c] else 1.0
            min1 = np.inf
            min2 = np.inf
            arg = -1
            for t in range(row_ptr[c], row_ptr[c + 1]):
                e = row_edges[t]
                v = q[e]
                a = abs(v)
                if v < 0:
                    sgn = -sgn
                if a < min1:
                    min2 = min1
                    min1 = a
                    arg = e
                elif a < min2:
                    min2 = a
            for t in range(row_ptr[c], row_ptr[c + 1]):
                e = row_edges[t]
                se = -sgn if q[e] < 0 else sgn
                r[e] = alpha * se * (min2 if e == arg else min1)
        for j in range(N):
            tot = llr0[j]
            for e in range(col_ptr[j], col_ptr[j + 1]):
                tot += r[e]
            post[j] = tot
            hard[j] = tot < 0
            for e in range(col_ptr[j], col_ptr[j + 1]):
                q[e] = tot - r[e]
        ok = True
        for c in range(m):
            par = s[c]
            for t in range(row_ptr[c], row_ptr[c + 1]):
                par ^= hard[edge_var[row_edges[t]]]
            if par:
                ok = False
                break
        if ok:
            return it, True
    return max_iters, False


@njit(cache=True, inline="always")
def _top_bit(x):
    # index of the highest set bit of a non-zero uint64
    b = 0
    if x >> np.uint64(32):
        x >>= np.uint64(32)
        b += 32
    if x >> np.uint64(16):
        x >>= np.uint64(16)
        b += 16
    if x >> np.uint64(8):
        x >>= np.uint64(8)
        b += 8
    if x >> np.uint64(4):
        x >>= np.uint64(4)
        b += 4
    if x >> np.uint64(2):
        x >>= np.uint64(2)
        b += 2
    if x >> np.uint64(1):
        b += 1
    return b


@njit(cache=True)
def _reduce(v, tag, basis_vec, basis_tag, has_pivot, tag_words):
    """Reduce ``v`` in place; returns the free pivot row, or -1 if ``v`` became 0."""
    top = v.shape[0] - 1
    while True:
        while top >= 0 and v[top] == 0:
            top -= 1
        if top < 0:
            return -1
        hb = top * 64 + _top_bit(v[top])
        if not has_pivot[hb]:
            return hb
        for w in range(top + 1):
            v[w] ^= basis_vec[hb, w]
        for w in range(tag_words):
            tag[w] ^= basis_tag[hb, w]


@njit(cache=True)
def _load_column(j, col_ptr, col_rows, v):
    v[:] = 0
    for e in range(col_ptr[j], col_ptr[j + 1]):
        row = col_rows[e]
        v[row >> 6] ^= np.uint64(1) << np.uint64(row & 63)


@njit(cache=True)
def _eliminate(order, col_ptr, col_rows, full_rank, basis_vec, basis_tag, has_pivot, sel, is_sel):
    """Greedy information set along ``order``; returns its size."""
    W = basis_vec.shape[1]
    TW = basis_tag.shape[1]
    v = np.zeros(W, dtype=np.uint64)
    tag = np.zeros(TW, dtype=np.uint64)
    has_pivot[:] = False
    is_sel[:] = False
    rnk = 0
    for idx in range(order.shape[0]):
        if rnk == full_rank:
            break
        j = order[idx]
        _load_column(j, col_ptr, col_rows, v)
        tw = (rnk >> 6) + 1
        tag[:tw] = 0
        hb = _reduce(v, tag, basis_vec, basis_tag, has_pivot, tw)
        if hb < 0:
            continue
        tag[rnk >> 6] ^= np.uint64(1) << np.uint64(rnk & 63)
        basis_vec[hb, :] = v
        basis_tag[hb, :tw] = tag[:tw]
        basis_tag[hb, tw:] = 0
        has_pivot[hb] = True
        sel[rnk] = j
        is_sel[j] = True
        rnk += 1
    return rnk


@njit(cache=True)
def _osd(s, order, col_ptr, col_rows, full_rank, weight, osd_order,
         basis_vec, basis_tag, has_pivot, sel, is_sel, x):
    """Fill ``x`` with the OSD solution.  Returns (status, order used, candidates tried)."""
    N = weight.shape[0]
    m = s.shape[0]
    W = basis_vec.shape[1]
    rnk = _eliminate(order, col_ptr, col_rows, full_rank, basis_vec, basis_tag, has_pivot, sel, is_sel)
    tw = (rnk >> 6) + 1
    v = np.zeros(W, dtype=np.uint64)
    t0 = np.zeros(basis_tag.shape[1], dtype=np.uint64)
    for c in range(m):
        if s[c]:
            v[c >> 6] ^= np.uint64(1) << np.uint64(c & 63)
    if _reduce(v, t0, basis_vec, basis_tag, has_pivot, tw) >= 0:
        return 1, 0, 0
    x[:] = False
    cost0 = 0.0
    for i in range(rnk):
        if (t0[i >> 6] >> np.uint64(i & 63)) & np.uint64(1):
            x[sel[i]] = True
            cost0 += weight[sel[i]]
    if osd_order <= 0:
        return 0, 0, 1
    # combination sweep over non-pivot mechanisms, least reliable first
    npiv = N - rnk
    free = np.empty(npiv, dtype=np.int64)
    nf = 0
    for idx in range(order.shape[0]):
        j = order[idx]
        if not is_sel[j]:
            free[nf] = j
            nf += 1
    n2 = min(osd_order, nf) if osd_order >= 2 else 0
    tags2 = np.zeros((max(n2, 1), basis_tag.shape[1]), dtype=np.uint64)
    tag = np.zeros(basis_tag.shape[1], dtype=np.uint64)
    best = cost0
    best_kind = 0
    best_a = -1
    best_b = -1
    best_tag = np.zeros(basis_tag.shape[1], dtype=np.uint64)
    tried = 1
    for a in range(nf):
        j = free[a]
        _load_column(j, col_ptr, col_rows, v)
        tag[:] = 0
        _reduce(v, tag, basis_vec, basis_tag, has_pivot, tw)
        if a < n2:
            tags2[a, :] = tag
        c = cost0 + weight[j]
        for w in range(tw):
            word = tag[w]
            while word:
                low = word & (~word + np.uint64(1))
                i = w * 64 + _top_bit(low)
                word ^= low
                if x[sel[i]]:
                    c -= weight[sel[i]]
                else:
                    c += weight[sel[i]]
        tried += 1
        if c < best:
            best = c
            best_kind = 1
            best_a = a
            best_tag[:] = tag
    for a in range(n2):
        for b in range(a + 1, n2):
            c = cost0 + weight[free[a]] + weight[free[b]]
            for w in range(tw):
                word = tags2[a, w] ^ tags2[b, w]
                tag[w] = word
                while word:
                    low = word & (~word + np.uint64(1))
                    i = w * 64 + _top_bit(low)
                    word ^= low
                    if x[sel[i]]:
                        c -= weight[sel[i]]
                    else:
                        c += weight[sel[i]]
            tried += 1
            if c < best:
                best = c
                best_kind = 2
                best_a = a
                best_b = b
                best_tag[:tw] = tag[:tw]
    if best_kind > 0:
        x[free[best_a]] = True
        if best_kind == 2:
            x[free[best_b]] = True
        for w in range(tw):
            word = best_tag[w]
            while word:
                low = word & (~word + np.uint64(1))
                i = w * 64 + _top_bit(low)
                word ^= low
                x[sel[i]] = not x[sel[i]]
    return 0, best_kind, tried


class BpOsdDecoder:
    """BP+OSD decoder for one detector error model.

    Mechanisms flipping no detector are excluded (nothing can detect them).
    ``osd_order`` selects the post-processing: 0 is plain OSD-0; ``λ >= 1``
    additionally sweeps every weight-1 test pattern over the non-pivot
    mechanisms, plus, for ``λ >= 2``, all weight-2 patterns among the ``λ``
    least reliable non-pivot mechanisms.
    """

    def __init__(self, model: DetectorErrorModel, max_iters: int = DEFAULT_MAX_ITERS,
                 osd_order: int = 1, scaling: float = DEFAULT_SCALING):
        if max_iters < 0 or osd_order < 0:
            raise ValueError("max_iters and osd_order must be non-negative")
        if model.num_observables > 63:
            raise ValueError("BP+OSD supports at most 63 observables")
        self.model = model
        self.max_iters = int(max_iters)
        self.osd_order = int(osd_order)
        self.scaling = float(scaling)
        H, _, priors, cols = model.check_matrices()
        self.columns = cols
        self.num_detectors = model.num_detectors
        self.num_observables = model.num_observables
        H = H.tocsc()
        H.sort_indices()
        self.col_ptr = H.indptr.astype(np.int64)
        self.col_rows = H.indices.astype(np.int64)
        E = self.col_rows.shape[0]
        N = H.shape[1]
        self.edge_var = np.repeat(np.arange(N, dtype=np.int64), np.diff(self.col_ptr))
        order = np.lexsort((np.arange(E), self.col_rows))
        self.row_edges = order.astype(np.int64)
        self.row_ptr = np.zeros(model.num_detectors + 1, dtype=np.int64)
        np.add.at(self.row_ptr, self.col_rows + 1, 1)
        self.row_ptr = np.cumsum(self.row_ptr)
        p = np.clip(priors, 1e-300, 1 - 1e-16)
        self.llr = np.log((1 - p) / p)
        self.obs_mask = np.zeros(N, dtype=np.uint64)
        for j, i in enumerate(cols):
            for o in model.mechanisms[i].observables:
                self.obs_mask[j] |= np.uint64(1) << np.uint64(o)
        m = model.num_detectors
        W = max(1, (m + 63) // 64)
        self._basis_vec = np.zeros((max(m, 1), W), dtype=np.uint64)
        self._basis_tag = np.zeros((max(m, 1), W), dtype=np.uint64)
        self._has_pivot = np.zeros(max(m, 1), dtype=np.bool_)
        self._sel = np.zeros(max(m, 1), dtype=np.int64)
        self._is_sel = np.zeros(N, dtype=np.bool_)
        self.rank = int(_eliminate(np.arange(N, dtype=np.int64), self.col_ptr, self.col_rows, m,
                                   self._basis_vec, self._basis_tag, self._has_pivot, self._sel, self._is_sel))
        self._q = np.zeros(E)
        self._r = np.zeros(E)
        self._post = np.zeros(N)
        self._hard = np.zeros(N, dtype=np.bool_)
        self._x = np.zeros(N, dtype=np.bool_)

    @property
    def num_mechanisms(self) -> int:
        return int(self.llr.shape[0])

    def solve(self, syndrome) -> tuple[np.ndarray, dict]:
        """Return the estimated mechanism vector (over ``columns``) and diagnostics."""
        s = as_syndrome(syndrome, self.num_detectors).astype(np.bool_)
        its, ok = _bp(s, self.llr, self.col_ptr, self.col_rows, self.row_ptr, self.row_edges,
                      self.edge_var, self.max_iters, self.scaling, self._q, self._r, self._post, self._hard)
        if ok:
            return self._hard.copy(), {"decoder": "bposd", "bp_iterations": int(its), "bp_converged": True,
                                       "osd_order": None}
        order = np.argsort(self._post, kind="stable").astype(np.int64)
        status, used, tried = _osd(s, order, self.col_ptr, self.col_rows, self.rank, self.llr, self.osd_order,
                                   self._basis_vec, self._basis_tag, self._has_pivot, self._sel,
                                   self._is_sel, self._x)
        if status != 0:
            raise UndecodableSyndromeError("syndrome is not in the column space of the check matrix")
        return self._x.copy(), {"decoder": "bposd", "bp_iterations": int(its), "bp_converged": False,
                                "osd_order": self.osd_order, "osd_pattern_weight": int(used),
                                "osd_candidates": int(tried)}

    def syndrome_of(self, x) -> np.ndarray:
        s = np.zeros(self.num_detectors, dtype=np.uint8)
        for j in np.flatnonzero(x):
            s[self.col_rows[self.col_ptr[j]:self.col_ptr[j + 1]]] ^= 1
        return s

    def observables_of(self, x) -> np.ndarray:
        mask = np.bitwise_xor.reduce(self.obs_mask[np.asarray(x, dtype=bool)]) if np.any(x) else np.uint64(0)
        return np.array([(int(mask) >> i) & 1 for i in range(self.num_observables)], dtype=np.uint8)

    def decode(self, syndrome) -> Correction:
        t0 = time.perf_counter()
        x, diag = self.solve(syndrome)
        obs = self.observables_of(x)
        diag["weight"] = int(x.sum())
        return Correction(obs, diag, time.perf_counter() - t0)

    def decode_batch(self, syndromes) -> np.ndarray:
        S = np.asarray(syndromes, dtype=np.uint8)
        out = np.zeros((S.shape[0], self.num_observables), dtype=np.uint8)
        for r in range(S.shape[0]):
            if S[r].any():
                x, _ = self.solve(S[r])
                out[r] = self.observables_of(x)
        return out


def bposd_decode(model: DetectorErrorModel, syndrome, max_iters: int = DEFAULT_MAX_ITERS,
                 osd_order: int = 1) -> Correction:
    """Decode one syndrome (reuses a per-model decoder for each parameter set)."""
    per = model.__dict__.get("_bposd_decoders")
    if per is None:
        per = {}
        object.__setattr__(model, "_bposd_decoders", per)
    key = (int(max_iters), int(osd_order))
    dec = per.get(key)
    if dec is None:
        dec = per[key] = BpOsdDecoder(model, max_iters=max_iters, osd_order=osd_order)
    return dec.decode(syndrome)
