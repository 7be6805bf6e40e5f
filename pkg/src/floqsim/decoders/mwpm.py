"""Minimum-weight perfect matching decoder.

Defects are the flipped detectors.  Pairwise distances come from exact
Dijkstra on the integer-weighted matching graph: either per shot (with an
early stop once every defect is settled) or, for graphs up to
``PRECOMPUTE_LIMIT`` detectors, once per decoder as an all-pairs table that
shots then index.  Both give identical distances, paths and tie-breaks,
since an early stop never changes a settled node.  The defect graph is then
matched exactly with the blossom algorithm: every defect with a route to
the boundary gets a private boundary copy, and the copies are joined to each
other at zero cost, so any number of defects may end at the boundary.
"""

from __future__ import annotations

import time
import weakref

import numpy as np
from numba import njit

from ._blossom import max_weight_matching_arrays
from .base import Correction, UnmatchableSyndromeError, as_syndrome
from .graph import INF, MatchingGraph, PathScratch, WEIGHT_SCALE, dijkstra


@njit(cache=True)
def defect_distances(defects, indptr, adj, adje, qw, eobs, boundary, boundary_live,
                     target, dist, pred, pobs, done, touched, hd, hn):
    """(K, K+1) integer distances (-1 = unreachable) and path observable masks.

    Column ``K`` is the boundary.  Only the upper triangle of the defect
    block is filled.
    """
    K = defects.shape[0]
    D = np.full((K, K + 1), -1, dtype=np.int64)
    O = np.zeros((K, K + 1), dtype=np.uint64)
    for i in range(K):
        target[defects[i]] = True
    if boundary_live:
        target[boundary] = True
    for i in range(K):
        target[defects[i]] = False
        nt = dijkstra(defects[i], indptr, adj, adje, qw, eobs, boundary, target,
                      K - 1 - i + (1 if boundary_live else 0),
                      dist, pred, pobs, done, touched, hd, hn)
        for j in range(i + 1, K):
            v = defects[j]
            if done[v]:
                D[i, j] = dist[v]
                O[i, j] = pobs[v]
        if done[boundary]:
            D[i, K] = dist[boundary]
            O[i, K] = pobs[boundary]
        for q in range(nt):
            v = touched[q]
            dist[v] = INF
            pred[v] = -1
            pobs[v] = 0
            done[v] = False
    target[boundary] = False
    return D, O


@njit(cache=True)
def all_pairs_tables(num_detectors, indptr, adj, adje, qw, eobs, boundary,
                     target, dist, pred, pobs, done, touched, hd, hn):
    """(N, N+1) distances (-1 = unreachable) and path masks from every detector."""
    N = num_detectors
    AD = np.full((N, N + 1), -1, dtype=np.int64)
    AO = np.zeros((N, N + 1), dtype=np.uint64)
    for i in range(N):
        nt = dijkstra(i, indptr, adj, adje, qw, eobs, boundary, target, 0,
                      dist, pred, pobs, done, touched, hd, hn)
        for q in range(nt):
            v = touched[q]
            if done[v]:
                AD[i, v] = dist[v]
                AO[i, v] = pobs[v]
            dist[v] = INF
            pred[v] = -1
            pobs[v] = 0
            done[v] = False
    return AD, AO


@njit(cache=True)
def lookup_distances(defects, AD, AO, boundary_live):
    """``defect_distances`` answered from all-pairs tables."""
    K = defects.shape[0]
    N = AD.shape[0]
    D = np.full((K, K + 1), -1, dtype=np.int64)
    O = np.zeros((K, K + 1), dtype=np.uint64)
    for i in range(K):
        a = defects[i]
        for j in range(i + 1, K):
            D[i, j] = AD[a, defects[j]]
            O[i, j] = AO[a, defects[j]]
        if boundary_live:
            D[i, K] = AD[a, N]
            O[i, K] = AO[a, N]
    return D, O


@njit(cache=True)
def match_defects(D):
    """Exact minimum-cost pairing of defects, boundary allowed.

    Returns ``(status, cost, partner)``: ``partner[i]`` is the matched defect
    or -1 for the boundary; status 1 means no perfect pairing exists.
    """
    K = D.shape[0]
    partner = np.full(K, -2, dtype=np.int64)
    if K == 0:
        return 0, 0, partner
    twin = np.full(K, -1, dtype=np.int64)
    nb = 0
    for i in range(K):
        if D[i, K] >= 0:
            twin[i] = K + nb
            nb += 1
    extra = 1 if (nb > 0 and (K + nb) % 2 == 1) else 0
    nv = K + nb + extra
    nedge = 0
    cmax = 0
    for i in range(K):
        for j in range(i + 1, K):
            if D[i, j] >= 0:
                nedge += 1
                if D[i, j] > cmax:
                    cmax = D[i, j]
        if D[i, K] >= 0:
            nedge += 1
            if D[i, K] > cmax:
                cmax = D[i, K]
    nt = nb + extra
    nedge += nt * (nt - 1) // 2
    ei = np.empty(nedge, dtype=np.int64)
    ej = np.empty(nedge, dtype=np.int64)
    ew = np.empty(nedge, dtype=np.int64)
    big = cmax + 1
    k = 0
    for i in range(K):
        for j in range(i + 1, K):
            if D[i, j] >= 0:
                ei[k] = i
                ej[k] = j
                ew[k] = big - D[i, j]
                k += 1
        if D[i, K] >= 0:
            ei[k] = i
            ej[k] = twin[i]
            ew[k] = big - D[i, K]
            k += 1
    for a in range(K, nv):
        for b in range(a + 1, nv):
            ei[k] = a
            ej[k] = b
            ew[k] = big
            k += 1
    mate = max_weight_matching_arrays(nv, ei, ej, ew, True)
    cost = 0
    for i in range(K):
        m = mate[i]
        if m < 0:
            return 1, 0, partner
        if m < K:
            partner[i] = m
            if i < m:
                cost += D[i, m]
        else:
            partner[i] = -1
            cost += D[i, K]
    return 0, cost, partner


@njit(cache=True)
def _combine(D, O, partner):
    K = D.shape[0]
    obs = np.uint64(0)
    for i in range(K):
        m = partner[i]
        if m == -1:
            obs ^= O[i, K]
        elif i < m:
            obs ^= O[i, m]
    return obs


PRECOMPUTE_LIMIT = 4000


class MwpmDecoder:
    """MWPM decoder bound to one matching graph (owns its scratch state).

    ``precompute`` selects all-pairs tables (``True``), per-shot Dijkstra
    (``False``) or, by default, tables when the graph has at most
    ``PRECOMPUTE_LIMIT`` detectors.
    """

    def __init__(self, graph: MatchingGraph, cache_size: int = 200_000, precompute: bool | None = None):
        self.graph = graph
        self._csr = graph.adjacency
        self._scratch = PathScratch(graph)
        self._boundary_live = bool(self._csr[0][graph.boundary + 1] > self._csr[0][graph.boundary])
        self._cache: dict[bytes, tuple[int, int, np.ndarray]] = {}
        self._cache_size = cache_size
        if precompute is None:
            precompute = graph.num_detectors <= PRECOMPUTE_LIMIT
        self._tables = None
        if precompute:
            sc = self._scratch
            indptr, adj, adje = self._csr
            self._tables = all_pairs_tables(graph.num_detectors, indptr, adj, adje, graph.qweight,
                                            graph.edge_obs, graph.boundary, sc.target, sc.dist, sc.pred,
                                            sc.pobs, sc.done, sc.touched, sc.hd, sc.hn)

    def distances(self, defects) -> tuple[np.ndarray, np.ndarray]:
        """(K, K+1) integer distance and path-mask tables for sorted defect indices."""
        d = np.ascontiguousarray(np.asarray(defects, dtype=np.int64))
        if self._tables is not None:
            return lookup_distances(d, self._tables[0], self._tables[1], self._boundary_live)
        g, sc = self.graph, self._scratch
        indptr, adj, adje = self._csr
        return defect_distances(d, indptr, adj, adje, g.qweight, g.edge_obs, g.boundary,
                                self._boundary_live, sc.target, sc.dist, sc.pred, sc.pobs,
                                sc.done, sc.touched, sc.hd, sc.hn)

    def match(self, defects) -> tuple[int, float, np.ndarray]:
        """Match explicit defect indices; returns (observable mask, cost, partner)."""
        d = np.ascontiguousarray(np.asarray(defects, dtype=np.int64))
        key = d.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            D, O = self.distances(d)
            status, cost, partner = match_defects(D)
            if status != 0:
                raise UnmatchableSyndromeError(
                    f"defects {d.tolist()} admit no pairing (disconnected components without a boundary route)"
                )
            hit = (int(_combine(D, O, partner)), int(cost), partner)
            if len(self._cache) < self._cache_size:
                self._cache[key] = hit
        mask, qcost, partner = hit
        return mask, qcost / WEIGHT_SCALE, partner

    def decode(self, syndrome) -> Correction:
        t0 = time.perf_counter()
        s = as_syndrome(syndrome, self.graph.num_detectors)
        defects = np.flatnonzero(s)
        mask, cost, _ = self.match(defects)
        obs = self.graph.observables_of(mask)
        return Correction(obs, {"decoder": "mwpm", "defects": int(defects.size), "cost": cost},
                          time.perf_counter() - t0)

    def decode_batch(self, syndromes) -> np.ndarray:
        """Predicted observable flips, shape (shots, num_observables)."""
        S = np.asarray(syndromes, dtype=np.uint8)
        out = np.zeros((S.shape[0], self.graph.num_observables), dtype=np.uint8)
        bit = np.uint64(1)
        for r in range(S.shape[0]):
            mask, _, _ = self.match(np.flatnonzero(S[r]))
            if mask:
                m = np.uint64(mask)
                for o in range(out.shape[1]):
                    out[r, o] = (m >> np.uint64(o)) & bit
        return out


_DECODERS: "weakref.WeakKeyDictionary[MatchingGraph, MwpmDecoder]" = weakref.WeakKeyDictionary()


def mwpm_decode(graph: MatchingGraph, syndrome) -> Correction:
    """Decode one syndrome (reuses a per-graph decoder instance)."""
    dec = _DECODERS.get(graph)
    if dec is None:
        dec = _DECODERS[graph] = MwpmDecoder(graph)
    return dec.decode(syndrome)
