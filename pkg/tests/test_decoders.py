"""MWPM (blossom + Dijkstra) and BP+OSD decoders against independent oracles."""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floqsim import dem as dem_mod
from floqsim.decoders import (BpOsdDecoder, MwpmDecoder, UndecodableSyndromeError, UnmatchableSyndromeError,
                              bposd_decode, mwpm_decode, shortest_paths, to_matching_graph)
from floqsim.decoders._blossom import max_weight_matching
from floqsim.decoders.graph import WEIGHT_SCALE
from floqsim.sampling import sample_shots

from oracles import brute_force_matching_weight, brute_force_pairing_cost, floyd_warshall


def random_graph_model(rng: np.random.Generator, nd: int, ne: int, boundary: int, no: int = 2):
    mechs = []
    for _ in range(ne):
        u, v = rng.choice(nd, 2, replace=False)
        obs = [o for o in range(no) if rng.random() < 0.3]
        mechs.append((float(rng.uniform(1e-3, 0.2)), [int(u), int(v)], obs))
    for _ in range(boundary):
        mechs.append((float(rng.uniform(1e-3, 0.2)), [int(rng.integers(nd))], [o for o in range(no) if rng.random() < 0.3]))
    return dem_mod.from_mechanisms(nd, no, mechs)


# -- blossom ---------------------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**31 - 1), st.booleans())
def test_blossom_equals_brute_force(n, seed, dense):
    rng = np.random.default_rng(seed)
    w = {}
    for u, v in itertools.combinations(range(n), 2):
        if dense or rng.random() < 0.5:
            w[(u, v)] = w[(v, u)] = int(rng.integers(1, 50))
    edges = [(u, v, x) for (u, v), x in w.items() if u < v]
    mate = max_weight_matching(n, edges) if edges else np.full(n, -1)
    for v in range(n):
        if mate[v] >= 0:
            assert mate[mate[v]] == v and (v, mate[v]) in w
    got = sum(w[(v, int(mate[v]))] for v in range(n) if mate[v] > v)
    assert got == brute_force_matching_weight(n, w)


def test_blossom_rejects_self_loop():
    with pytest.raises(ValueError):
        max_weight_matching(3, [(1, 1, 5)])


# -- shortest paths ---------------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.integers(0, 2**31 - 1))
def test_dijkstra_matches_floyd_warshall(nd, seed):
    rng = np.random.default_rng(seed)
    m = random_graph_model(rng, nd, int(rng.integers(1, 3 * nd)), int(rng.integers(0, 4)))
    g = to_matching_graph(m)
    # paths never pass through the boundary node (it is only an endpoint)
    fw = floyd_warshall(g.num_nodes, zip(g.edge_u.tolist(), g.edge_v.tolist(), g.qweight.tolist()), g.boundary)
    sp = shortest_paths(g, range(g.num_detectors))
    assert np.array_equal(sp["qdistance"], fw[:-1])


def test_adjacent_and_boundary_distances():
    m = dem_mod.from_mechanisms(3, 1, [(0.05, [0, 1], [0]), (0.01, [1], []), (0.2, [2], [])])
    g = to_matching_graph(m)
    d = shortest_paths(g, [0, 1])["distance"]
    w01 = np.log(0.95 / 0.05)
    assert d[0, 1] == pytest.approx(w01, abs=1e-5)
    assert d[1, g.boundary] == pytest.approx(np.log(0.99 / 0.01), abs=1e-5)
    assert d[0, 2] == np.inf


# -- MWPM ---------------------------------------------------------------------------------------


def test_empty_syndrome_mwpm(model):
    g = to_matching_graph(model("hcf", 1, 8))
    corr = mwpm_decode(g, np.zeros(g.num_detectors, np.uint8))
    assert not corr.observables.any() and corr.diagnostics["cost"] == 0


def test_syndrome_length_checked(model):
    g = to_matching_graph(model("hcf", 1, 1))
    with pytest.raises(ValueError):
        mwpm_decode(g, np.zeros(g.num_detectors + 1, np.uint8))


def test_unmatchable_syndrome():
    g = to_matching_graph(dem_mod.from_mechanisms(3, 1, [(0.1, [0, 1], [0])]))
    with pytest.raises(UnmatchableSyndromeError):
        mwpm_decode(g, [1, 0, 0])


def _most_likely_observables(m: dem_mod.DetectorErrorModel):
    by_dets = defaultdict(list)
    for x in m.mechanisms:
        by_dets[x.detectors].append(x)
    out = {}
    for dets, xs in by_dets.items():
        xs = sorted(xs, key=lambda x: -x.probability)
        if len(xs) == 1 or xs[0].probability > xs[1].probability * (1 + 1e-9):
            out[dets] = xs[0].observables
    return out


@pytest.mark.parametrize("ell", [1, 2])
def test_mwpm_corrects_every_single_fault(model, ell):
    """Each mechanism's own syndrome decodes to its observables (to the most likely one when ambiguous)."""
    m = model("hcf", ell, 8)
    dec = MwpmDecoder(to_matching_graph(m))
    target = _most_likely_observables(m)
    if ell == 2:
        # distance 3: no two mechanisms share a syndrome with different observables
        assert len(target) == len({x.detectors for x in m.mechanisms})
    for x in m.mechanisms:
        if x.detectors not in target:
            continue
        s = np.zeros(m.num_detectors, np.uint8)
        s[list(x.detectors)] = 1
        got = tuple(np.flatnonzero(dec.decode(s).observables))
        assert got == target[x.detectors], x


@pytest.mark.parametrize("family, ell, periods, p", [("hcf", 2, 8, 3e-3), ("hf", 1, 16, 3e-3), ("hf", 2, 4, 2e-3)])
def test_mwpm_cost_equals_brute_force_pairing(model, family, ell, periods, p):
    """On sampled syndromes with <= 8 defects, blossom's cost is the exhaustive pairing minimum."""
    m = model(family, ell, periods, p)
    g = to_matching_graph(m)
    dec = MwpmDecoder(g, precompute=False)
    S, _ = sample_shots(m, 1500, seed=21)
    checked = 0
    for s in S:
        defects = np.flatnonzero(s)
        if not 0 < defects.size <= 8:
            continue
        D, _ = dec.distances(defects)
        # distances agree with an independent single-source search
        sp = shortest_paths(g, defects)["qdistance"]
        iu = np.triu_indices(defects.size, 1)
        assert np.array_equal(D[:, :-1][iu], sp[:, defects][iu])
        assert np.array_equal(D[:, -1], sp[:, g.boundary])
        _, cost, _ = dec.match(defects)
        assert round(cost * WEIGHT_SCALE) == brute_force_pairing_cost(D)
        checked += 1
    assert checked >= 100


@pytest.mark.parametrize("family, ell", [("hcf", 2), ("hf", 2)])
def test_tables_agree_with_per_shot_search(model, family, ell):
    m = model(family, ell, 8 if family == "hcf" else 16, 3e-3)
    g = to_matching_graph(m)
    a = MwpmDecoder(g, precompute=True, cache_size=0)
    b = MwpmDecoder(g, precompute=False, cache_size=0)
    S, _ = sample_shots(m, 400, seed=5)
    for s in S:
        d = np.flatnonzero(s)
        Da, Oa = a.distances(d)
        Db, Ob = b.distances(d)
        assert np.array_equal(Da, Db) and np.array_equal(Oa, Ob)
    assert np.array_equal(a.decode_batch(S), b.decode_batch(S))


def test_decode_batch_matches_single_decodes(model):
    m = model("hf", 1, 16, 3e-3)
    dec = MwpmDecoder(to_matching_graph(m))
    S, _ = sample_shots(m, 200, seed=6)
    batch = dec.decode_batch(S)
    for s, row in zip(S, batch):
        assert np.array_equal(dec.decode(s).observables, row)


# -- BP+OSD ---------------------------------------------------------------------------------------


def test_empty_syndrome_bposd(model):
    m = model("hf", 1, 4)
    corr = bposd_decode(m, np.zeros(m.num_detectors, np.uint8))
    assert not corr.observables.any()
    assert corr.diagnostics["bp_iterations"] == 0 and corr.diagnostics["weight"] == 0


def test_undecodable_syndrome():
    m = dem_mod.from_mechanisms(3, 1, [(0.1, [0, 1], [0])])
    with pytest.raises(UndecodableSyndromeError):
        BpOsdDecoder(m).decode([1, 0, 0])


@pytest.mark.parametrize("bad", [dict(max_iters=-1), dict(osd_order=-2)])
def test_bposd_parameter_validation(model, bad):
    with pytest.raises(ValueError):
        BpOsdDecoder(model("hcf", 1, 1), **bad)


@pytest.mark.parametrize("osd_order", [0, 1, 3])
@pytest.mark.parametrize("family", ["hcf", "hf"])
def test_bposd_output_explains_the_syndrome(model, family, osd_order):
    m = model(family, 2, 4 if family == "hcf" else 8, 1e-2)
    dec = BpOsdDecoder(m, max_iters=10, osd_order=osd_order)
    S, _ = sample_shots(m, 150, seed=31)
    used_osd = False
    for s in S:
        x, diag = dec.solve(s)
        assert np.array_equal(dec.syndrome_of(x), s)
        used_osd |= not diag["bp_converged"]
    assert used_osd


def _ml_single_or_pair(m, H_cols, probs, target):
    """Exhaustive ML over one- and two-mechanism explanations of ``target``."""
    by_syn = defaultdict(list)
    for j, key in enumerate(H_cols):
        by_syn[key].append(j)
    odds = probs / (1 - probs)
    cands = [((j,), odds[j]) for j in by_syn.get(target, [])]
    for i, key in enumerate(H_cols):
        for j in by_syn.get(key ^ target, []):
            if j > i:
                cands.append(((i, j), odds[i] * odds[j]))
    cands.sort(key=lambda c: -c[1])
    return cands


@pytest.mark.parametrize("family, ell, periods, min_agree", [
    ("hcf", 1, 8, 1.0), ("hf", 1, 4, 1.0), ("hcf", 2, 2, 1.0), ("hf", 2, 2, 0.9),
])
def test_bposd_selects_unique_most_likely_mechanism(model, family, ell, periods, min_agree):
    """Single-mechanism syndromes with a clear maximum-likelihood explanation among all
    one- and two-mechanism candidates decode to exactly that mechanism.

    Min-sum BP can settle on a valid but less likely explanation around overlapping
    hyperedges (HF), where it stops before OSD runs; there a small shortfall is tolerated.
    """
    m = model(family, ell, periods, 2e-3)
    dec = BpOsdDecoder(m, osd_order=1)
    H, _, priors, cols = m.check_matrices()
    H = H.tocsc()
    keys = []
    for j in range(H.shape[1]):
        k = 0
        for d in H.indices[H.indptr[j]:H.indptr[j + 1]]:
            k |= 1 << int(d)
        keys.append(k)
    checked = agree = 0
    for j, key in enumerate(keys):
        cands = _ml_single_or_pair(m, keys, priors, key)
        best = cands[0]
        if best[0] != (j,) or (len(cands) > 1 and cands[1][1] > best[1] / 1.5):
            continue  # not a clear single-mechanism winner
        s = np.zeros(m.num_detectors, np.uint8)
        s[[d for d in range(m.num_detectors) if key >> d & 1]] = 1
        x, _ = dec.solve(s)
        assert np.array_equal(dec.syndrome_of(x), s)
        checked += 1
        agree += np.flatnonzero(x).tolist() == [j]
    assert checked >= 4
    assert agree >= min_agree * checked


def test_bposd_decode_reuses_decoder(model):
    m = model("hcf", 1, 1)
    s = np.zeros(m.num_detectors, np.uint8)
    bposd_decode(m, s)
    bposd_decode(m, s)
    assert len(m.__dict__["_bposd_decoders"]) == 1
