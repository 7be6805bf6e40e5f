"""Memory experiments: logical error rates, thresholds, timing, reports.

A run is fully described by an ``ExperimentConfig``.  Shots are processed in
fixed-size batches; batch ``b`` of the point with index ``i`` is sampled
from ``SeedSequence([seed, i]).spawn(...)[b]``, so failure counts depend
only on the config, never on the number of workers or the order in which
batches finish.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import multiprocessing as mp
import numpy as np

from . import circuit as circ
from . import dem as dem_mod
from . import lattice as lat
from .decoders import BpOsdDecoder, MwpmDecoder, to_matching_graph
from .decoders.graph import WEIGHTINGS
from .sampling import DEFAULT_BATCH, ShotSampler

DECODER_NAMES = ("mwpm", "bposd")
# code distance labels for the hcf16 refinements (metadata only, not computed)
DISTANCE_LABELS = {1: 2, 2: 3, 3: 4, 5: 7, 8: 11}
DEFAULT_STEPS = 48


def period_length(family: str) -> int:
    return len(circ.FAMILY_SCHEDULES[circ.normalize_family(family)])


def periods_for_steps(family: str, steps: int) -> int:
    """Number of schedule periods covering ``steps`` time steps exactly."""
    k = period_length(family)
    if steps <= 0 or steps % k:
        raise ValueError(f"{steps} steps is not a whole number of {family} periods ({k} steps each)")
    return steps // k


def threads_from_env(default: int = 1) -> int:
    """Worker cap from ``FLOQSIM_THREADS`` (invalid or missing -> ``default``)."""
    raw = os.environ.get("FLOQSIM_THREADS", "")
    try:
        v = int(raw)
    except ValueError:
        return default
    return max(1, v)


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class ExperimentConfig:
    """One memory experiment over a grid of physical error rates.

    ``periods=None`` means ``DEFAULT_STEPS`` time steps (8 HCF periods or 16
    HF periods).
    """

    family: str = "hcf"
    lattice: str = "hcf16"
    ell: int = 1
    periods: int | None = None
    noise: str = "em3-ind"
    p: tuple[float, ...] = (1e-3,)
    decoder: str = "mwpm"
    bp_iters: int = 30
    osd_order: int = 1
    weighting: str = "llr"
    shots: int = 10_000
    seed: int = 0
    basis: str = "Z"
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", circ.normalize_family(self.family))
        object.__setattr__(self, "noise", circ.normalize_noise_kind(self.noise))
        ps = tuple(float(x) for x in (self.p if isinstance(self.p, Iterable) else (self.p,)))
        object.__setattr__(self, "p", ps)
        object.__setattr__(self, "decoder", self.decoder.lower())
        object.__setattr__(self, "basis", self.basis.upper())
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not ps:
            raise ValueError("p grid is empty")
        if any(not 0.0 < x < 1.0 for x in ps):
            raise ValueError("p grid values must lie in (0, 1)")
        if self.decoder not in DECODER_NAMES:
            raise ValueError(f"decoder must be one of {DECODER_NAMES}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.periods is not None and self.periods < 1:
            raise ValueError("periods must be >= 1")
        if self.basis not in ("X", "Z"):
            raise ValueError("memory basis must be X or Z")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def num_periods(self) -> int:
        return self.periods if self.periods is not None else periods_for_steps(self.family, DEFAULT_STEPS)

    @property
    def num_steps(self) -> int:
        return self.num_periods * period_length(self.family)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = list(self.p)
        d["periods"] = self.num_periods
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TimingStats:
    minimum: float
    median: float
    mean: float
    maximum: float

    @classmethod
    def of(cls, times: np.ndarray) -> "TimingStats":
        if times.size == 0:
            return cls(0.0, 0.0, 0.0, 0.0)
        return cls(float(times.min()), float(np.median(times)), float(times.mean()), float(times.max()))


@dataclass(frozen=True)
class PointResult:
    p: float
    shots: int
    failures: int
    observable_failures: tuple[int, ...]
    timing: TimingStats
    num_detectors: int = 0
    num_mechanisms: int = 0

    @property
    def logical_error_rate(self) -> float:
        return self.failures / self.shots

    @property
    def std_error(self) -> float:
        q = self.logical_error_rate
        return math.sqrt(q * (1 - q) / self.shots)

    @property
    def interval(self) -> tuple[float, float]:
        """95% interval: Wilson when failures < 20, normal approximation otherwise."""
        if self.failures < 20:
            return wilson_interval(self.failures, self.shots)
        q, s = self.logical_error_rate, self.std_error
        return max(0.0, q - 1.96 * s), min(1.0, q + 1.96 * s)

    @property
    def observable_rates(self) -> tuple[float, ...]:
        return tuple(f / self.shots for f in self.observable_failures)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    points: tuple[PointResult, ...]
    num_qubits: int
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def logical_error_rates(self) -> np.ndarray:
        return np.array([pt.logical_error_rate for pt in self.points])


def wilson_interval(failures: int, shots: int, z: float = 1.96) -> tuple[float, float]:
    if shots <= 0:
        raise ValueError("shots must be positive")
    q = failures / shots
    den = 1 + z * z / shots
    centre = (q + z * z / (2 * shots)) / den
    half = z * math.sqrt(q * (1 - q) / shots + z * z / (4 * shots * shots)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


# ---------------------------------------------------------------------------
# building blocks


def build_model(config: ExperimentConfig, p: float, tiling: lat.Tiling | None = None
                ) -> tuple[dem_mod.DetectorErrorModel, lat.Tiling]:
    t = tiling if tiling is not None else lat.build_lattice(config.lattice, config.ell)
    c = circ.memory_circuit(t, config.family, config.num_periods, config.basis,
                            noise=circ.NoiseModel(config.noise, p))
    return dem_mod.compile_dem(c), t


def make_decoder(model: dem_mod.DetectorErrorModel, config: ExperimentConfig, cache: bool = True):
    """Decoder instance with a ``decode(syndrome) -> Correction`` method."""
    if config.decoder == "mwpm":
        return MwpmDecoder(to_matching_graph(model, config.weighting), cache_size=200_000 if cache else 0)
    return BpOsdDecoder(model, max_iters=config.bp_iters, osd_order=config.osd_order)


def _point_seeds(seed: int, index: int, nbatches: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence([seed, index]).spawn(nbatches)


def _run_batch(sampler: ShotSampler, decoder, ss: np.random.SeedSequence, shots: int
               ) -> tuple[int, np.ndarray, np.ndarray]:
    batch = sampler.batch(np.random.default_rng(ss), shots)
    k = batch.observables.shape[1]
    obs_fail = np.zeros(k, dtype=np.int64)
    failures = 0
    times = np.empty(shots)
    for r in range(shots):
        corr = decoder.decode(batch.syndromes[r])
        times[r] = corr.elapsed
        wrong = corr.observables != batch.observables[r]
        if wrong.any():
            failures += 1
            obs_fail += wrong
    return failures, obs_fail, times


# per-process state for pooled runs
_WORKER: dict = {}


def _worker_init(model, config) -> None:
    _WORKER["sampler"] = ShotSampler(model)
    _WORKER["decoder"] = make_decoder(model, config)


def _worker_batch(args) -> tuple[int, tuple[int, np.ndarray, np.ndarray]]:
    b, ss, shots = args
    return b, _run_batch(_WORKER["sampler"], _WORKER["decoder"], ss, shots)


def _run_point(model, config: ExperimentConfig, index: int, workers: int) -> tuple[int, np.ndarray, np.ndarray]:
    nb = (config.shots + config.batch_size - 1) // config.batch_size
    seeds = _point_seeds(config.seed, index, nb)
    sizes = [min(config.batch_size, config.shots - b * config.batch_size) for b in range(nb)]
    results: dict[int, tuple[int, np.ndarray, np.ndarray]] = {}
    if workers <= 1 or nb == 1:
        sampler, decoder = ShotSampler(model), make_decoder(model, config)
        for b in range(nb):
            results[b] = _run_batch(sampler, decoder, seeds[b], sizes[b])
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
        with ProcessPoolExecutor(max_workers=min(workers, nb), mp_context=ctx,
                                 initializer=_worker_init, initargs=(model, config)) as pool:
            for b, res in pool.map(_worker_batch, [(b, seeds[b], sizes[b]) for b in range(nb)]):
                results[b] = res
    failures = sum(results[b][0] for b in range(nb))
    obs = np.sum([results[b][1] for b in range(nb)], axis=0)
    times = np.concatenate([results[b][2] for b in range(nb)])
    return failures, obs, times


def logical_error_rate(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Sample, decode and count failures (any observable wrong) for each p."""
    workers = threads_from_env() if workers is None else max(1, workers)
    t = lat.build_lattice(config.lattice, config.ell)
    points = []
    for i, p in enumerate(config.p):
        model, _ = build_model(config, p, t)
        failures, obs, times = _run_point(model, config, i, workers)
        points.append(PointResult(p, config.shots, int(failures), tuple(int(x) for x in obs),
                                  TimingStats.of(times), model.num_detectors, len(model.mechanisms)))
    meta = {"seed": config.seed, "config_hash": config.config_hash(), "git_describe": git_describe(),
            "distance_label": DISTANCE_LABELS.get(config.ell)}
    return ExperimentResult(config, tuple(points), t.n, meta)


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class Curve:
    """Logical error rate samples for one code size."""

    size: int
    p: tuple[float, ...]
    failures: tuple[int, ...]
    shots: tuple[int, ...]

    @property
    def rates(self) -> np.ndarray:
        return np.array(self.failures, dtype=float) / np.array(self.shots, dtype=float)

    @classmethod
    def from_rates(cls, size: int, p: Sequence[float], rates: Sequence[float], shots: int = 1) -> "Curve":
        """Exact curve (``shots`` only matters for bootstrapping)."""
        return cls(size, tuple(float(x) for x in p), tuple(float(r) * shots for r in rates),
                   tuple([shots] * len(p)))

    @classmethod
    def from_result(cls, result: ExperimentResult) -> "Curve":
        return cls(result.num_qubits, tuple(pt.p for pt in result.points),
                   tuple(pt.failures for pt in result.points), tuple(pt.shots for pt in result.points))


@dataclass(frozen=True)
class ThresholdEstimate:
    crossed: bool
    low: float | None
    high: float | None
    crossings: tuple[tuple[int, int, float], ...]
    bootstrap_low: float | None = None
    bootstrap_high: float | None = None
    flag: str = ""


def _crossing(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float | None | str:
    """First crossing of two curves under log-log linear interpolation.

    Returns the crossing p, ``None`` when the curves never cross on the
    grid, or ``"degenerate"`` when they coincide everywhere.
    """
    ok = (a > 0) & (b > 0)
    if ok.sum() < 2:
        return None
    x = np.log(p[ok])
    diff = np.log(a[ok]) - np.log(b[ok])
    if np.all(np.abs(diff) < 1e-12):
        return "degenerate"
    for i in range(len(x)):
        if abs(diff[i]) < 1e-12:
            return float(np.exp(x[i]))
        if i + 1 < len(x) and diff[i] * diff[i + 1] < 0:
            f = diff[i] / (diff[i] - diff[i + 1])
            return float(np.exp(x[i] + f * (x[i + 1] - x[i])))
    return None


def _pairwise(curves: Sequence[Curve], rates: Sequence[np.ndarray]) -> tuple[list, bool]:
    out, degenerate = [], False
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            pi, pj = np.array(curves[i].p), np.array(curves[j].p)
            common = np.intersect1d(pi, pj)
            a = rates[i][np.searchsorted(pi, common)]
            b = rates[j][np.searchsorted(pj, common)]
            c = _crossing(common, a, b)
            if c == "degenerate":
                degenerate = True
            elif c is not None:
                out.append((curves[i].size, curves[j].size, c))
    return out, degenerate


def threshold_estimate(curves: Sequence[Curve], bootstrap: int = 200, seed: int = 0) -> ThresholdEstimate:
    """Pairwise curve crossings; the estimate is their [min, max] interval.

    Uncertainty comes from a parametric bootstrap: every point's failure
    count is redrawn from a binomial with the observed rate, and the 2.5/97.5
    percentiles of the resampled min/max crossings are reported.
    """
    curves = [Curve(c.size, *zip(*sorted(zip(c.p, c.failures, c.shots)))) for c in curves]
    if len(curves) < 2:
        raise ValueError("need at least two code sizes")
    rates = [c.rates for c in curves]
    found, degenerate = _pairwise(curves, rates)
    if not found:
        return ThresholdEstimate(False, None, None, (), flag="degenerate" if degenerate else "no-crossing")
    xs = [c for _, _, c in found]
    lo_b = hi_b = None
    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        lows, highs = [], []
        for _ in range(bootstrap):
            rs = [rng.binomial(np.array(c.shots, dtype=np.int64), np.clip(r, 0, 1)) / np.array(c.shots)
                  for c, r in zip(curves, rates)]
            f, _ = _pairwise(curves, rs)
            if f:
                lows.append(min(x for _, _, x in f))
                highs.append(max(x for _, _, x in f))
        if lows:
            lo_b, hi_b = float(np.percentile(lows, 2.5)), float(np.percentile(highs, 97.5))
    return ThresholdEstimate(True, min(xs), max(xs), tuple(found), lo_b, hi_b)


def threshold_sweep(config: ExperimentConfig, ells: Sequence[int], workers: int | None = None,
                    bootstrap: int = 200) -> tuple[list[ExperimentResult], ThresholdEstimate]:
    results = [logical_error_rate(replace(config, ell=e), workers) for e in ells]
    return results, threshold_estimate([Curve.from_result(r) for r in results], bootstrap, config.seed)


# ---------------------------------------------------------------------------
# timing


@dataclass(frozen=True)
class PowerLawFit:
    """``T = beta * n ** alpha`` fitted by least squares in log-log space."""

    alpha: float
    beta: float
    r2: float


def fit_power_law(n: Sequence[float], T: Sequence[float]) -> PowerLawFit:
    x = np.log(np.asarray(n, dtype=float))
    y = np.log(np.asarray(T, dtype=float))
    if x.size < 2:
        raise ValueError("need at least two sizes")
    A = np.vstack([x, np.ones_like(x)]).T
    (alpha, logb), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (alpha * x + logb)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(alpha), float(math.exp(logb)), r2)


@dataclass(frozen=True)
class TimingRow:
    n: int
    ell: int
    decoder: str
    shots: int
    stats: TimingStats
    # BP+OSD only: shots where BP converged alone vs. shots that needed OSD
    bp_only: int = 0
    osd_engaged: int = 0
    bp_only_mean: float = 0.0
    osd_mean: float = 0.0


@dataclass(frozen=True)
class TimingResult:
    rows: tuple[TimingRow, ...]
    fits: dict

    def row(self, n: int, decoder: str) -> TimingRow:
        for r in self.rows:
            if r.n == n and r.decoder == decoder:
                return r
        raise KeyError((n, decoder))


def timing_benchmark(config: ExperimentConfig, ells: Sequence[int], shots: int | None = None,
                     decoders: Sequence[str] = DECODER_NAMES) -> TimingResult:
    """Decode pre-generated syndromes serially and time every shot.

    Uses the first p of the config.  MWPM runs without its syndrome cache so
    every shot is a genuine decode.
    """
    shots = config.shots if shots is None else shots
    p = config.p[0]
    rows = []
    for ell in ells:
        cfg = replace(config, ell=ell)
        model, t = build_model(cfg, p)
        sampler = ShotSampler(model)
        syn = np.concatenate([b.syndromes for b in sampler.batches(shots, config.seed, config.batch_size)])
        for name in decoders:
            dec = make_decoder(model, replace(cfg, decoder=name), cache=False)
            dec.decode(syn[0])  # warm-up (compilation, lazy tables)
            times = np.empty(shots)
            osd = np.zeros(shots, dtype=bool)
            for r in range(shots):
                t0 = time.perf_counter()
                corr = dec.decode(syn[r])
                times[r] = time.perf_counter() - t0
                osd[r] = corr.diagnostics.get("bp_converged") is False
            extra = {}
            if name == "bposd":
                extra = dict(bp_only=int((~osd).sum()), osd_engaged=int(osd.sum()),
                             bp_only_mean=float(times[~osd].mean()) if (~osd).any() else 0.0,
                             osd_mean=float(times[osd].mean()) if osd.any() else 0.0)
            rows.append(TimingRow(t.n, ell, name, shots, TimingStats.of(times), **extra))
    fits = {}
    for name in decoders:
        rs = [r for r in rows if r.decoder == name]
        if len(rs) >= 2:
            fits[name] = fit_power_law([r.n for r in rs], [r.stats.mean for r in rs])
    return TimingResult(tuple(rows), fits)


# ---------------------------------------------------------------------------
# reports

CSV_COLUMNS = ("family", "lattice", "ell", "n", "distance", "periods", "steps", "noise", "basis", "p",
               "decoder", "shots", "failures", "p_l", "std_error", "ci_low", "ci_high", "observable_failures")


def git_describe(cwd: str | Path | None = None) -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=cwd or Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def result_rows(result: ExperimentResult) -> list[dict]:
    c = result.config
    rows = []
    for pt in result.points:
        lo, hi = pt.interval
        rows.append({
            "family": c.family, "lattice": c.lattice, "ell": c.ell, "n": result.num_qubits,
            "distance": DISTANCE_LABELS.get(c.ell, ""), "periods": c.num_periods, "steps": c.num_steps,
            "noise": c.noise, "basis": c.basis, "p": repr(pt.p), "decoder": c.decoder, "shots": pt.shots,
            "failures": pt.failures, "p_l": repr(pt.logical_error_rate), "std_error": repr(pt.std_error),
            "ci_low": repr(lo), "ci_high": repr(hi),
            "observable_failures": ";".join(str(x) for x in pt.observable_failures),
        })
    return rows


def results_csv(results: ExperimentResult | Sequence[ExperimentResult]) -> str:
    """CSV text, one row per (size, p, decoder).  Deterministic for a fixed config."""
    if isinstance(results, ExperimentResult):
        results = [results]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerows(result_rows(r))
    return buf.getvalue()


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def result_json(result: ExperimentResult) -> dict:
    return {
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "seed": result.config.seed,
        "git_describe": result.metadata.get("git_describe", git_describe()),
        "num_qubits": result.num_qubits,
        "points": [
            {**row, "timing": asdict(pt.timing), "num_detectors": pt.num_detectors,
             "num_mechanisms": pt.num_mechanisms}
            for row, pt in zip(result_rows(result), result.points)
        ],
    }


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def report(results: ExperimentResult | Sequence[ExperimentResult], path: str | Path, fmt: str | None = None) -> Path:
    """Write results as CSV or JSON (format from ``fmt`` or the file suffix)."""
    fmt = (fmt or Path(path).suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        return _write(path, results_csv(results))
    if fmt == "json":
        items = [results] if isinstance(results, ExperimentResult) else list(results)
        data = [result_json(r) for r in items]
        return _write(path, json.dumps(data[0] if len(data) == 1 else data, indent=2, sort_keys=True) + "\n")
    raise ValueError(f"unknown report format {fmt!r}")


def histogram_csv(model: dem_mod.DetectorErrorModel) -> str:
    """Detector-weight histogram with columns ``w,count,percent`` (merged mechanisms)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["w", "count", "percent"])
    for k, (count, pct) in dem_mod.weight_histogram(model).items():
        w.writerow([k, count, f"{pct:.1f}"])
    return buf.getvalue()


def timing_csv(result: TimingResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "ell", "decoder", "shots", "t_min", "t_median", "t_mean", "t_max",
                "bp_only", "osd_engaged", "bp_only_mean", "osd_mean"])
    for r in result.rows:
        s = r.stats
        w.writerow([r.n, r.ell, r.decoder, r.shots, s.minimum, s.median, s.mean, s.maximum,
                    r.bp_only, r.osd_engaged, r.bp_only_mean, r.osd_mean])
    return buf.getvalue()


def fit_table_csv(fits: Mapping[str, PowerLawFit]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["decoder", "alpha", "beta", "r2"])
    for name, f in fits.items():
        w.writerow([name, repr(f.alpha), repr(f.beta), repr(f.r2)])
    return buf.getvalue()
