"""Tableau simulator, Pauli frames, and the frame-vs-tableau single-fault oracle."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floqsim import circuit as circ
from floqsim import stabsim
from floqsim.stabsim import Tableau


def _same(a: Tableau, b: Tableau) -> bool:
    return np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z) and np.array_equal(a.r, b.r)


def test_measure_z_on_zero_state():
    tab = Tableau.product_state(4, "Z", 0)
    before = tab.copy()
    out, tab = stabsim.measure_pauli_product(tab, {0: "Z"})
    assert out == 0
    assert _same(tab, before)


def test_measure_x_on_plus_state_is_deterministic():
    tab = Tableau.product_state(3, "X", 0)
    assert stabsim.measure_pauli_product(tab, "XII")[0] == 0


@pytest.mark.parametrize("seed", range(5))
def test_repeated_measurement_agrees(seed):
    tab = Tableau.product_state(4, "Z", seed)
    first, _ = stabsim.measure_pauli_product(tab, {0: "X", 1: "X"})
    second, _ = stabsim.measure_pauli_product(tab, {0: "X", 1: "X"})
    assert first == second


def test_measuring_identity_rejected():
    tab = Tableau(2, 0)
    with pytest.raises(ValueError):
        tab.measure(np.zeros(2, bool), np.zeros(2, bool))


def test_error_flips_anticommuting_outcome():
    tab = Tableau.product_state(2, "Z", 0)
    tab.apply_pauli(*stabsim.pauli_vectors(2, {0: "X"}))
    assert stabsim.measure_pauli_product(tab, "ZZ")[0] == 1


def _symplectic_ok(tab: Tableau) -> bool:
    n = tab.n
    X, Z = tab.x.astype(np.int64), tab.z.astype(np.int64)
    form = (X @ Z.T + Z @ X.T) % 2
    expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
    idx = np.arange(n)
    expected[idx, n + idx] = expected[n + idx, idx] = 1
    return np.array_equal(form, expected)


paulis = st.text(alphabet="IXYZ", min_size=4, max_size=4).filter(lambda s: set(s) != {"I"})


@settings(max_examples=80, deadline=None)
@given(st.lists(paulis, min_size=1, max_size=12), st.integers(0, 2**31 - 1))
def test_random_measurements_keep_canonical_pairing(ops, seed):
    tab = Tableau.product_state(4, "Z", seed)
    for op in ops:
        out, _ = stabsim.measure_pauli_product(tab, op)
        # the measured operator is now stabilized with the reported sign
        assert tab.peek(*stabsim.pauli_from_string(op)) == out
        assert _symplectic_ok(tab)


# -- frames -----------------------------------------------------------------------------


def test_frame_flips_zz_but_not_xx(hcf16):
    c = circ.build_circuit("hcf", hcf16, 1)
    zstep = next(s for s in c.steps if s.basis == "Z")
    xstep = next(s for s in c.steps if s.basis == "X" and s.time > zstep.time)
    e, u, v = zstep.checks[0]
    flips = stabsim.frame_propagate(c, (zstep.time, {u: "X"}))
    assert flips[zstep.index_of_edge[e]]
    # X on u commutes with every XX check of the following X step
    xs = [xstep.offset + i for i in range(len(xstep.checks))]
    assert not flips[xs].any()


def test_frame_time_range(hcf16):
    c = circ.build_circuit("hcf", hcf16, 1)
    with pytest.raises(ValueError):
        stabsim.frame_propagate(c, (c.num_steps + 1, {0: "X"}))


def test_single_x_fault_lights_two_detectors(memory):
    from floqsim.dem import fault_signature

    c = memory("hcf", 1, 8)
    dets, _ = fault_signature(c, 7, {0: "X"})
    assert len(dets) == 2


@pytest.mark.parametrize("family", ["hcf", "hf"])
def test_frame_matches_tableau_for_every_single_fault(memory, family):
    """Exhaustive over (time, qubit, Pauli) on hcf16: one HCF period, two HF periods (six steps)."""
    c = memory(family, 1, 1 if family == "hcf" else 2)
    base, rnd = stabsim.run_tableau(c, seed=11)
    det_sets = [d.outcomes for d in c.detectors]
    obs_sets = [o.outcomes for o in c.observables]
    base_d = stabsim.parities(base, det_sets)
    base_o = stabsim.parities(base, obs_sets)
    for t in range(c.num_steps + 1):
        for q in range(c.num_qubits):
            for P in "XYZ":
                flips = stabsim.frame_propagate(c, (t, {q: P}))
                # pin random outcomes to the branch the frame picture predicts
                forced = {int(m): int(base[m] ^ flips[m]) for m in np.flatnonzero(rnd)}
                out, rnd2 = stabsim.run_tableau(c, seed=12, faults={t: {q: P}}, forced=forced)
                assert np.array_equal(rnd, rnd2)
                assert np.array_equal(out ^ base, flips.astype(np.uint8)), (t, q, P)
                # deterministic parities agree under an unpinned run as well
                free, _ = stabsim.run_tableau(c, seed=13 + t, faults={t: {q: P}})
                fd = np.array([int(flips[list(s)].sum()) & 1 for s in det_sets], dtype=np.uint8)
                fo = np.array([int(flips[list(s)].sum()) & 1 for s in obs_sets], dtype=np.uint8)
                assert np.array_equal(stabsim.parities(free, det_sets) ^ base_d, fd)
                assert np.array_equal(stabsim.parities(free, obs_sets) ^ base_o, fo)


# -- determinism report -------------------------------------------------------------------


@pytest.mark.parametrize("family, periods", [("hcf", 8), ("hf", 16)])
def test_48_step_circuits_are_deterministic(memory, family, periods):
    c = memory(family, 1, periods)
    assert c.num_steps == 48
    assert stabsim.check_detector_determinism(c, repeats=4) == []


def test_corrupted_detector_is_reported(memory):
    from dataclasses import replace

    c = memory("hcf", 1, 2)
    _, rnd = stabsim.run_tableau(c, seed=0)
    # drop an outcome that is random on its own, so the parity becomes random
    i, d = next((i, d) for i, d in enumerate(c.detectors) if any(rnd[m] for m in d.outcomes))
    m = next(m for m in d.outcomes if rnd[m])
    bad = replace(d, outcomes=tuple(x for x in d.outcomes if x != m))
    dets = c.detectors[:i] + (bad,) + c.detectors[i + 1:]
    report = stabsim.check_detector_determinism(replace(c, detectors=dets), repeats=8)
    assert len(report) == 1 and report[0].startswith(f"detector {i} ")


@pytest.mark.parametrize("family", ["hcf", "hf"])
def test_plaquette_stabilization_matches_inference_model(hcf16, family):
    """A plaquette is in the ISG exactly when it was inferred after its last randomization."""
    c = circ.build_circuit(family, hcf16, 3 if family == "hcf" else 6)
    tabs = {}
    stabsim.run_tableau(c, seed=3, on_step=lambda t, tab: tabs.__setitem__(t, tab.copy()))
    for f, (verts, color) in enumerate(hcf16.faces):
        for mu in circ.face_type(family, color):
            px, pz = stabsim.pauli_vectors(16, {q: mu for q in verts})
            rand = circ.randomization_times(c, hcf16, f, mu)
            infs = [i.time for i in circ.plaquette_inference_sets(c, hcf16, f, mu)]
            seen = False
            for t in range(6, c.num_steps):
                last_rand = max((r for r in rand if r <= t), default=-1)
                last_inf = max((i for i in infs if i <= t), default=-1)
                stab = tabs[t].is_stabilized(px, pz)
                assert stab == (last_inf > last_rand), (f, mu, t)
                seen |= stab
            assert seen, (f, mu)  # every plaquette is measured within each period


@pytest.mark.parametrize("family, period", [("hcf", 6), ("hf", 6)])
def test_logical_representatives_are_stabilized_and_periodic(memory, family, period):
    """Tableau oracle: each representative is in the ISG (Z memory) and repeats with the period."""
    c = memory(family, 1, 4 if family == "hcf" else 8)
    n = c.num_qubits
    tabs = {}
    stabsim.run_tableau(c, seed=5, on_step=lambda t, tab: tabs.__setitem__(t, tab.copy()))
    for o in c.observables:
        reps = o.representatives
        assert len(reps) == c.num_steps + 1
        for t in range(1, c.num_steps):
            x, z = reps[t]
            px = np.array([(x >> q) & 1 for q in range(n)], bool)
            pz = np.array([(z >> q) & 1 for q in range(n)], bool)
            assert tabs[t - 1].is_stabilized(px, pz), (o.loop, t)
        start = 0 if family == "hcf" else period // 2
        # the last entry precedes the readout, which needs no update
        for t in range(start, c.num_steps - period):
            assert reps[t + period] == reps[t]
