"""Acceptance criteria 1-7.

Each test prints one ``criterion N: PASS|FAIL - detail`` line (also collected in
the terminal summary) and then asserts it, so unmet criteria stay red.

Monte Carlo criteria (3-6) are marked ``slow`` and use the stated shot counts.
``FLOQSIM_ACCEPTANCE_SHOTS`` overrides the per-point shot count for quick runs.
"""

from __future__ import annotations

import os
from dataclasses import replace

import numpy as np
import pytest

from floqsim import anyon
from floqsim import circuit as circ
from floqsim import dem as dem_mod
from floqsim import experiments as ex
from floqsim import gf2
from floqsim import lattice as lat
from floqsim import stabsim
from floqsim.decoders import MwpmDecoder, to_matching_graph
from floqsim.sampling import sample_shots

from oracles import brute_force_pairing_cost


def _shots(default: int) -> int:
    override = os.environ.get("FLOQSIM_ACCEPTANCE_SHOTS")
    return int(override) if override else default


def _record(log, capsys, k: int, passed: bool, detail: str) -> None:
    log[k] = (passed, detail)
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


def _hist_text(h: dict) -> str:
    return ", ".join(f"w={w}: {c} ({pct:.1f}%)" for w, (c, pct) in h.items())


# ---------------------------------------------------------------------------------------------
# 1. HCF mechanisms all have weight 2


def test_criterion_1_hcf_weight_two(model, acceptance_log, capsys):
    parts, ok = [], True
    for ell in (1, 2):
        h = dem_mod.weight_histogram(model("hcf", ell, 8))
        ok &= set(h) == {2} and h[2][1] == 100.0
        parts.append(f"n={16 * ell * ell}: {_hist_text(h)}")
    _record(acceptance_log, capsys, 1, ok, "HCF EM3-ind 48 steps; " + "; ".join(parts))


# ---------------------------------------------------------------------------------------------
# 2. HF weight spread with w=4 modal


def test_criterion_2_hf_weight_spread(model, acceptance_log, capsys):
    h = dem_mod.weight_histogram(model("hf", 2, 16))
    mode = max(h, key=lambda w: h[w][0])
    ok = {1, 2, 3, 4} <= set(h) and mode == 4
    _record(acceptance_log, capsys, 2, ok, f"HF EM3-ind n=64 48 steps; mode w={mode}; {_hist_text(h)}")


# ---------------------------------------------------------------------------------------------
# 3. threshold crossing


@pytest.mark.slow
def test_criterion_3_threshold(acceptance_log, capsys):
    shots = _shots(10_000)
    grid = (0.008, 0.01, 0.012, 0.015, 0.018, 0.021, 0.025)
    cfg = ex.ExperimentConfig(family="hcf", periods=1, p=grid, shots=shots, seed=2024)
    curves = {}
    for ell in (2, 3, 5):
        curves[ell] = ex.Curve.from_result(ex.logical_error_rate(replace(cfg, ell=ell)))
    est = ex.threshold_estimate([curves[2], curves[3]], bootstrap=200, seed=1)
    info = ex.threshold_estimate([curves[3], curves[5]], bootstrap=200, seed=1)
    ok = est.crossed and 0.010 <= est.low and est.high <= 0.020

    def fmt(e):
        if not e.crossed:
            return f"no crossing ({e.flag})"
        s = f"{e.low:.4f}"
        if e.bootstrap_low is not None:
            s += f" (bootstrap 95% [{e.bootstrap_low:.4f}, {e.bootstrap_high:.4f}])"
        return s

    _record(acceptance_log, capsys, 3, ok,
            f"HCF MWPM one period, {shots} shots/point: n=64/144 crossing {fmt(est)}, target [0.010, 0.020]; "
            f"n=144/400 crossing {fmt(info)} (information)")


# ---------------------------------------------------------------------------------------------
# 4. HCF better than HF at n=144


@pytest.mark.slow
def test_criterion_4_hcf_vs_hf(acceptance_log, capsys):
    shots = _shots(100_000)
    rates = {}
    for fam in ("hcf", "hf"):
        cfg = ex.ExperimentConfig(family=fam, ell=3, p=(3.7e-3,), shots=shots, seed=77)
        rates[fam] = ex.logical_error_rate(cfg).points[0]
    ratio = rates["hcf"].logical_error_rate / rates["hf"].logical_error_rate
    ok = 0.25 <= ratio <= 0.7
    _record(acceptance_log, capsys, 4, ok,
            f"n=144 p=3.7e-3 MWPM {shots} shots: P_L(HCF)={rates['hcf'].logical_error_rate:.4g} "
            f"P_L(HF)={rates['hf'].logical_error_rate:.4g} ratio={ratio:.3f}, target [0.25, 0.7]")


# ---------------------------------------------------------------------------------------------
# 5. decoder sensitivity split


@pytest.mark.slow
def test_criterion_5_decoder_sensitivity(acceptance_log, capsys):
    shots = _shots(100_000)
    pl = {}
    for fam in ("hcf", "hf"):
        for dec in ("mwpm", "bposd"):
            cfg = ex.ExperimentConfig(family=fam, ell=2, p=(3.2e-3,), shots=shots, seed=55, decoder=dec)
            pl[fam, dec] = ex.logical_error_rate(cfg).points[0].logical_error_rate
    hcf = max(pl["hcf", "mwpm"], pl["hcf", "bposd"]) / min(pl["hcf", "mwpm"], pl["hcf", "bposd"])
    hf = pl["hf", "mwpm"] / pl["hf", "bposd"]
    ok = hcf <= 1.5 and hf >= 2.0
    _record(acceptance_log, capsys, 5, ok,
            f"n=64 p=3.2e-3 {shots} shots: HCF MWPM {pl['hcf', 'mwpm']:.4g} BP+OSD {pl['hcf', 'bposd']:.4g} "
            f"(max/min {hcf:.2f}, need <= 1.5); HF MWPM {pl['hf', 'mwpm']:.4g} BP+OSD {pl['hf', 'bposd']:.4g} "
            f"(ratio {hf:.2f}, need >= 2)")


# ---------------------------------------------------------------------------------------------
# 6. timing ordering and power-law fit


@pytest.mark.slow
def test_criterion_6_timing(acceptance_log, capsys):
    shots = _shots(2_000)
    n = np.array([16.0, 64.0, 144.0, 400.0])
    fit = ex.fit_power_law(n, 2.0 * n ** 1.5)
    ok = abs(fit.alpha - 1.5) < 1e-9 and abs(fit.beta - 2.0) < 1e-9 and abs(fit.r2 - 1.0) < 1e-12
    parts = [f"synthetic fit alpha={fit.alpha:.6f} beta={fit.beta:.6f} R2={fit.r2:.6f}"]
    for fam in ("hcf", "hf"):
        cfg = ex.ExperimentConfig(family=fam, p=(2.2e-3,), shots=shots, seed=3)
        res = ex.timing_benchmark(cfg, (1, 2, 3))
        speed = []
        for size in (16, 64, 144):
            mw, bp = res.row(size, "mwpm").stats.mean, res.row(size, "bposd").stats.mean
            r = bp / mw
            ok &= r > 1 and (size < 64 or r >= 10)
            speed.append(f"n={size}: {mw * 1e6:.0f}us vs {bp * 1e6:.0f}us ({r:.0f}x)")
        b64 = res.row(64, "bposd")
        parts.append(f"{fam.upper()} " + ", ".join(speed)
                     + f"; BP+OSD n=64 modes: BP-only {b64.bp_only} shots {b64.bp_only_mean * 1e6:.0f}us, "
                       f"OSD {b64.osd_engaged} shots {b64.osd_mean * 1e6:.0f}us")
    _record(acceptance_log, capsys, 6, ok, f"{shots} shots/size p=2.2e-3; " + "; ".join(parts))


# ---------------------------------------------------------------------------------------------
# 7. property suites


def _tiling_properties(t: lat.Tiling, fails: list, notes: list) -> None:
    if lat.validate_tiling(t):
        fails.append(f"n={t.n} invalid tiling")
    hb = lat.homology_basis(t)
    if hb.rank != 2 * t.genus or gf2.det(hb.intersection_matrix) != 1:
        fails.append(f"n={t.n} homology basis")
    k_formula = 2 + t.n // 8
    if t.num_logical != k_formula:
        fails.append(f"n={t.n}: k={t.num_logical} (genus {t.genus}) but 2+n/8={k_formula}")
    else:
        notes.append(f"n={t.n} k={t.num_logical}=2+n/8")


def _anyon_properties(fails: list) -> None:
    for a in anyon.ALL_BOSONS:
        t = anyon.classify(a)
        if [len(t.with_status(s)) for s in "VDC"] != [1, 4, 4]:
            fails.append(f"condensation table of {a}")
    if (anyon.monodromy("rx", "ry"), anyon.monodromy("gz", "bz"), anyon.monodromy("gx", "rz")) != (1, 1, -1):
        fails.append("monodromy values")


def _circuit_properties(hcf16, memory, fails: list) -> int:
    for fam, periods in (("hcf", 8), ("hf", 16)):
        c = memory(fam, 1, periods)
        if stabsim.check_detector_determinism(c, repeats=4):
            fails.append(f"{fam} detector determinism")
    # six-step logical pattern periodicity, checked against the tableau
    c = memory("hcf", 1, 8)
    tabs = {}
    stabsim.run_tableau(c, seed=9, on_step=lambda t, tab: tabs.__setitem__(t, tab.copy()))
    for o in c.observables:
        reps = o.representatives
        if any(reps[t + 6] != reps[t] for t in range(c.num_steps - 6)):
            fails.append(f"observable {o.loop} pattern not 6-periodic")
        for t in range(1, c.num_steps):
            x, z = reps[t]
            px = np.array([(x >> q) & 1 for q in range(16)], bool)
            pz = np.array([(z >> q) & 1 for q in range(16)], bool)
            if not tabs[t - 1].is_stabilized(px, pz):
                fails.append(f"observable {o.loop} representative not in the stabilizer group at t={t}")
                break
    # frame vs tableau, every single Pauli fault, one HCF period
    c = memory("hcf", 1, 1)
    base, rnd = stabsim.run_tableau(c, seed=4)
    count = 0
    for t in range(c.num_steps + 1):
        for q in range(16):
            for P in "XYZ":
                flips = stabsim.frame_propagate(c, (t, {q: P}))
                forced = {int(m): int(base[m] ^ flips[m]) for m in np.flatnonzero(rnd)}
                out, _ = stabsim.run_tableau(c, seed=5, faults={t: {q: P}}, forced=forced)
                count += 1
                if not np.array_equal(out ^ base, flips.astype(np.uint8)):
                    fails.append(f"frame/tableau disagree for {P}{q} at t={t}")
    return count


def _blossom_properties(model, fails: list) -> int:
    checked = 0
    for fam, periods in (("hcf", 8), ("hf", 16)):
        m = model(fam, 2, periods, 3e-3)
        dec = MwpmDecoder(to_matching_graph(m))
        S, _ = sample_shots(m, 2000, seed=8)
        for s in S:
            d = np.flatnonzero(s)
            if not 0 < d.size <= 8:
                continue
            D, _ = dec.distances(d)
            _, cost, _ = dec.match(d)
            checked += 1
            if round(cost * 1_000_000) != brute_force_pairing_cost(D):
                fails.append(f"{fam}: blossom cost differs from brute force for defects {d.tolist()}")
    return checked


def test_criterion_7_property_suites(hcf16, refined, memory, model, acceptance_log, capsys):
    fails: list[str] = []
    notes: list[str] = []
    for t in (hcf16, refined(2), refined(3)):
        _tiling_properties(t, fails, notes)
    _anyon_properties(fails)
    faults = _circuit_properties(hcf16, memory, fails)
    syndromes = _blossom_properties(model, fails)
    summary = (f"tilings/homology on n=16,64,144, anyon tables, determinism, 6-step periodicity, "
               f"{faults} single faults frame=tableau, {syndromes} syndromes blossom=brute force")
    detail = summary + ("; violations: " + "; ".join(fails) if fails else "; all hold")
    _record(acceptance_log, capsys, 7, not fails, detail)
