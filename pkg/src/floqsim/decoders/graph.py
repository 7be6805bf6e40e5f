"""Detector-level matching graph and exact shortest paths."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from ..dem import DetectorErrorModel, decompose_hyperedges, merge_probability

WEIGHTINGS = ("llr", "neglogp")
# integer quantization of edge weights: exact sums and exact tie detection
WEIGHT_SCALE = 1_000_000
INF = np.iinfo(np.int64).max // 4


def edge_weight(p: float, weighting: str = "llr") -> float:
    """``log((1-p)/p)`` (default) or the literal ``-log p``."""
    if not 0 < p < 1:
        raise ValueError(f"edge probability must lie in (0, 1), got {p}")
    if weighting == "llr":
        return float(np.log((1 - p) / p))
    if weighting == "neglogp":
        return float(-np.log(p))
    raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")


@dataclass(frozen=True, eq=False)
class MatchingGraph:
    """Detectors plus one boundary node (index ``num_detectors``).

    Edge ``e`` joins ``edge_u[e] < edge_v[e]``; ``edge_obs[e]`` is the bit
    mask of observables flipped along it.  ``qweight`` holds the integer
    weights used for all path and matching arithmetic.
    """

    num_detectors: int
    num_observables: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_probability: np.ndarray
    edge_weight: np.ndarray
    edge_obs: np.ndarray
    weighting: str = "llr"

    @property
    def boundary(self) -> int:
        return self.num_detectors

    @property
    def num_nodes(self) -> int:
        return self.num_detectors + 1

    @property
    def num_edges(self) -> int:
        return int(self.edge_u.shape[0])

    @cached_property
    def qweight(self) -> np.ndarray:
        return np.maximum(1, np.rint(self.edge_weight * WEIGHT_SCALE)).astype(np.int64)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR ``(indptr, neighbour, edge id)`` with neighbours in ascending order."""
        n = self.num_nodes
        u = np.concatenate([self.edge_u, self.edge_v])
        v = np.concatenate([self.edge_v, self.edge_u])
        e = np.concatenate([np.arange(self.num_edges)] * 2)
        order = np.lexsort((v, u))
        u, v, e = u[order], v[order], e[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, u + 1, 1)
        return np.cumsum(indptr), v.astype(np.int64), e.astype(np.int64)

    def observables_of(self, mask: int) -> np.ndarray:
        return np.array([(int(mask) >> i) & 1 for i in range(self.num_observables)], dtype=np.uint8)

    def edges(self):
        """Iterate ``(u, v, probability, weight, observable tuple)``."""
        for e in range(self.num_edges):
            m = int(self.edge_obs[e])
            yield (int(self.edge_u[e]), int(self.edge_v[e]), float(self.edge_probability[e]),
                   float(self.edge_weight[e]), tuple(i for i in range(self.num_observables) if m >> i & 1))


def to_matching_graph(model: DetectorErrorModel, weighting: str = "llr", synthesize: bool = True) -> MatchingGraph:
    """Build the matching graph, decomposing hyperedges first.

    Every graph-like component of a mechanism contributes the mechanism's
    probability to its edge (singletons go to the boundary).  Parallel
    contributions combine as independent flips; when they disagree on
    observables the edge keeps the payload carrying the most probability.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    if model.num_observables > 63:
        raise ValueError("matching supports at most 63 observables")
    dec = decompose_hyperedges(model, synthesize=synthesize)
    B = model.num_detectors
    prob: dict[tuple[int, int], float] = {}
    payload: dict[tuple[int, int], dict[int, float]] = {}
    for i, m in enumerate(model.mechanisms):
        if not m.detectors or m.probability <= 0:
            continue
        for comp in dec[i]:
            ds = comp.detectors
            key = (ds[0], ds[1]) if len(ds) == 2 else (ds[0], B)
            mask = 0
            for o in comp.observables:
                mask |= 1 << o
            prob[key] = merge_probability(prob[key], m.probability) if key in prob else m.probability
            slot = payload.setdefault(key, {})
            slot[mask] = slot.get(mask, 0.0) + m.probability
    keys = sorted(prob)
    eu = np.array([k[0] for k in keys], dtype=np.int64)
    ev = np.array([k[1] for k in keys], dtype=np.int64)
    ep = np.array([prob[k] for k in keys], dtype=np.float64)
    ew = np.array([edge_weight(min(p, 1 - 1e-15), weighting) for p in ep], dtype=np.float64)
    eo = np.array([max(sorted(payload[k].items()), key=lambda kv: kv[1])[0] for k in keys], dtype=np.uint64)
    return MatchingGraph(model.num_detectors, model.num_observables, eu, ev, ep, ew, eo, weighting)


# ---------------------------------------------------------------------------
# Dijkstra on integer weights


@njit(cache=True)
def _heap_push(hd, hn, size, d, n):
    i = size
    hd[i] = d
    hn[i] = n
    while i > 0:
        par = (i - 1) >> 1
        if hd[par] > hd[i] or (hd[par] == hd[i] and hn[par] > hn[i]):
            hd[par], hd[i] = hd[i], hd[par]
            hn[par], hn[i] = hn[i], hn[par]
            i = par
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(hd, hn, size):
    d = hd[0]
    n = hn[0]
    size -= 1
    hd[0] = hd[size]
    hn[0] = hn[size]
    i = 0
    while True:
        lft = 2 * i + 1
        if lft >= size:
            break
        c = lft
        r = lft + 1
        if r < size and (hd[r] < hd[lft] or (hd[r] == hd[lft] and hn[r] < hn[lft])):
            c = r
        if hd[c] < hd[i] or (hd[c] == hd[i] and hn[c] < hn[i]):
            hd[c], hd[i] = hd[i], hd[c]
            hn[c], hn[i] = hn[i], hn[c]
            i = c
        else:
            break
    return d, n, size


@njit(cache=True)
def dijkstra(src, indptr, adj, adje, qw, eobs, boundary, target, ntargets,
             dist, pred, pobs, done, touched, hd, hn):
    """Single-source shortest paths; stops once ``ntargets`` targets settle.

    ``target[v]`` marks nodes to wait for (``ntargets <= 0`` runs to
    exhaustion).  The boundary node is never expanded.  Among equal-length
    paths the predecessor with the smallest index wins.  Scratch arrays
    must arrive reset (``dist = INF``, ``pred = -1``, ``done = False``);
    the touched nodes are listed in ``touched`` and their count returned.
    """
    nt = 0
    dist[src] = 0
    pred[src] = -1
    pobs[src] = 0
    touched[nt] = src
    nt += 1
    size = _heap_push(hd, hn, 0, 0, src)
    remaining = ntargets
    while size > 0:
        d, u, size = _heap_pop(hd, hn, size)
        if done[u] or d != dist[u]:
            continue
        done[u] = True
        if target[u]:
            remaining -= 1
            if remaining == 0:
                break
        if u == boundary:
            continue
        for q in range(indptr[u], indptr[u + 1]):
            v = adj[q]
            if done[v]:
                continue
            e = adje[q]
            nd = d + qw[e]
            dv = dist[v]
            if nd < dv or (nd == dv and u < pred[v]):
                if dv == INF:
                    touched[nt] = v
                    nt += 1
                dist[v] = nd
                pred[v] = u
                pobs[v] = pobs[u] ^ eobs[e]
                if nd < dv:
                    size = _heap_push(hd, hn, size, nd, v)
    return nt




class PathScratch:
    """Reusable Dijkstra scratch buffers for one graph."""

    def __init__(self, graph: MatchingGraph):
        n = graph.num_nodes
        m = graph.num_edges
        self.dist = np.full(n, INF, dtype=np.int64)
        self.pred = np.full(n, -1, dtype=np.int64)
        self.pobs = np.zeros(n, dtype=np.uint64)
        self.done = np.zeros(n, dtype=np.bool_)
        self.touched = np.empty(n, dtype=np.int64)
        self.hd = np.empty(2 * m + n + 1, dtype=np.int64)
        self.hn = np.empty(2 * m + n + 1, dtype=np.int64)
        self.target = np.zeros(n, dtype=np.bool_)


def shortest_paths(graph: MatchingGraph, sources) -> dict:
    """Exact single-source shortest paths from each source.

    Returns ``{"distance": float (len(sources), num_nodes), "qdistance":
    int64 (same shape, -1 = unreachable), "predecessor": int64, "observables":
    uint64 path masks}``.  Distances are in weight units (``edge_weight``).
    """
    indptr, adj, adje = graph.adjacency
    sc = PathScratch(graph)
    src = np.asarray(list(sources), dtype=np.int64)
    n = graph.num_nodes
    qd = np.full((len(src), n), -1, dtype=np.int64)
    pr = np.full((len(src), n), -1, dtype=np.int64)
    po = np.zeros((len(src), n), dtype=np.uint64)
    for i, s in enumerate(src):
        if not 0 <= s < n:
            raise ValueError(f"source {s} out of range")
        nt = dijkstra(int(s), indptr, adj, adje, graph.qweight, graph.edge_obs, graph.boundary,
                      sc.target, 0, sc.dist, sc.pred, sc.pobs, sc.done, sc.touched, sc.hd, sc.hn)
        t = sc.touched[:nt]
        qd[i, t] = sc.dist[t]
        pr[i, t] = sc.pred[t]
        po[i, t] = sc.pobs[t]
        sc.dist[t] = INF
        sc.pred[t] = -1
        sc.pobs[t] = 0
        sc.done[t] = False
    dist = np.where(qd >= 0, qd / WEIGHT_SCALE, np.inf)
    return {"distance": dist, "qdistance": qd, "predecessor": pr, "observables": po}
