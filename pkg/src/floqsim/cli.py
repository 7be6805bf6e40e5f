"""Command-line interface: ``floqsim {run,lattice,dem,decode,bench,threshold}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import circuit as circ
from . import dem as dem_mod
from . import experiments as ex
from . import lattice as lat
from .decoders import (BpOsdDecoder, MwpmDecoder, UndecodableSyndromeError, UnmatchableSyndromeError,
                       to_matching_graph)
from .decoders.graph import WEIGHTINGS


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _add_code_args(p: argparse.ArgumentParser, ell: bool = True) -> None:
    p.add_argument("--family", default="hcf", choices=("hf", "hcf"))
    p.add_argument("--lattice", default="hcf16", help="shipped lattice name or lattice file")
    if ell:
        p.add_argument("--ell", type=int, default=1, help="refinement level")
    p.add_argument("--periods", type=int, default=None, help="schedule periods (default: 48 steps)")
    p.add_argument("--noise", default="em3-ind", choices=circ.NOISE_KINDS)
    p.add_argument("--basis", default="Z", choices=("X", "Z"))


def _add_decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", default="mwpm", choices=ex.DECODER_NAMES)
    p.add_argument("--bp-iters", type=int, default=30)
    p.add_argument("--osd-order", type=int, default=1)
    p.add_argument("--weighting", default="llr", choices=WEIGHTINGS)


def _config(args, **over) -> ex.ExperimentConfig:
    kw = dict(family=args.family, lattice=args.lattice, ell=getattr(args, "ell", 1), periods=args.periods,
              noise=args.noise, basis=args.basis, p=getattr(args, "p", (1e-3,)),
              decoder=getattr(args, "decoder", "mwpm"), bp_iters=getattr(args, "bp_iters", 30),
              osd_order=getattr(args, "osd_order", 1), weighting=getattr(args, "weighting", "llr"),
              shots=getattr(args, "shots", 1), seed=getattr(args, "seed", 0))
    kw.update(over)
    return ex.ExperimentConfig(**kw)


def _print_result(r: ex.ExperimentResult) -> None:
    for pt in r.points:
        lo, hi = pt.interval
        print(f"n={r.num_qubits} p={pt.p:g} decoder={r.config.decoder} shots={pt.shots} failures={pt.failures} "
              f"P_L={pt.logical_error_rate:.4g} ± {pt.std_error:.2g} [{lo:.3g}, {hi:.3g}] "
              f"mean decode {pt.timing.mean * 1e6:.1f} µs")


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _config(args)
    result = ex.logical_error_rate(cfg)
    _print_result(result)
    if args.out:
        ex.report(result, args.out)
        print(f"wrote {args.out}")
    if args.json:
        ex.report(result, args.json, "json")
        print(f"wrote {args.json}")
    return 0


def cmd_lattice(args) -> int:
    t = lat.build_lattice(args.lattice, args.ell)
    problems = lat.validate_tiling(t)
    hb = lat.homology_basis(t)
    info = {"n": t.n, "edges": len(t.edges), "faces": len(t.faces), "p": t.p, "genus": t.genus,
            "k": t.num_logical, "homology_rank": hb.rank, "face_sizes": sorted({len(f) for f, _ in t.faces}),
            "valid": not problems}
    print(json.dumps(info, sort_keys=True))
    for msg in problems:
        print("invalid:", msg, file=sys.stderr)
    if args.export:
        lat.save(t, args.export)
        print(f"wrote {args.export}")
    return 0 if not problems else 1


def cmd_dem(args) -> int:
    cfg = _config(args, p=(args.p,))
    model, _ = ex.build_model(cfg, args.p)
    print(f"detectors={model.num_detectors} observables={model.num_observables} mechanisms={len(model.mechanisms)}")
    text = ex.histogram_csv(model)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(dem_mod.dumps(model))
        print(f"wrote {args.out}")
    if args.histogram:
        Path(args.histogram).write_text(text)
        print(f"wrote {args.histogram}")
    return 0


def _read_syndromes(path: str, nd: int) -> np.ndarray:
    """One shot per line: a 0/1 string of length ``nd`` or comma-separated defect indices."""
    rows = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if set(ln) <= {"0", "1"} and len(ln) == nd:
            rows.append(np.frombuffer(ln.encode(), dtype=np.uint8) - ord("0"))
        else:
            s = np.zeros(nd, dtype=np.uint8)
            idx = [int(x) for x in ln.replace(" ", "").split(",") if x]
            if any(not 0 <= i < nd for i in idx):
                raise ValueError(f"defect index out of range in line {ln!r}")
            s[idx] = 1
            rows.append(s)
    return np.array(rows, dtype=np.uint8).reshape(-1, nd)


def cmd_decode(args) -> int:
    model = dem_mod.loads(Path(args.dem).read_text())
    if args.decoder == "mwpm":
        dec = MwpmDecoder(to_matching_graph(model, args.weighting))
    else:
        dec = BpOsdDecoder(model, max_iters=args.bp_iters, osd_order=args.osd_order)
    S = _read_syndromes(args.syndromes, model.num_detectors)
    status = 0
    for i, s in enumerate(S):
        try:
            corr = dec.decode(s)
        except (UndecodableSyndromeError, UnmatchableSyndromeError) as exc:
            print("!")
            print(f"floqsim: shot {i}: {exc}", file=sys.stderr)
            status = 1
            continue
        print("".join(str(int(x)) for x in corr.observables))
    return status


def cmd_bench(args) -> int:
    cfg = _config(args, p=(args.p,), shots=args.shots)
    res = ex.timing_benchmark(cfg, args.ells, decoders=args.decoders)
    text = ex.timing_csv(res)
    print(text, end="")
    print(ex.fit_table_csv(res.fits), end="")
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    return 0


def cmd_threshold(args) -> int:
    cfg = _config(args, periods=args.periods if args.periods is not None else 1)
    results, est = ex.threshold_sweep(cfg, args.ells, bootstrap=args.bootstrap)
    for r in results:
        _print_result(r)
    if est.crossed:
        print(f"crossing interval [{est.low:.4g}, {est.high:.4g}]", end="")
        if est.bootstrap_low is not None:
            print(f" (bootstrap 95%: [{est.bootstrap_low:.4g}, {est.bootstrap_high:.4g}])", end="")
        print()
        for a, b, x in est.crossings:
            print(f"  n={a} vs n={b}: {x:.4g}")
    else:
        print(f"no crossing ({est.flag})")
    if args.out:
        ex.report(results, args.out)
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="floqsim", description="Floquet color-code memory experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="logical error rates over a p grid")
    _add_code_args(p)
    _add_decoder_args(p)
    p.add_argument("--p", type=_floats, required=True, help="comma-separated physical error rates")
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--json", help="JSON report path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("lattice", help="build, validate and export a lattice")
    p.add_argument("--lattice", default="hcf16")
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--export", help="write the lattice file here")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("dem", help="compile a detector error model; print its weight histogram")
    _add_code_args(p)
    p.add_argument("--p", type=float, default=1e-3)
    p.add_argument("--out", help="write the model in text form")
    p.add_argument("--histogram", help="write the weight histogram CSV")
    p.set_defaults(func=cmd_dem)

    p = sub.add_parser("decode", help="decode syndromes from a file against a saved model")
    p.add_argument("--dem", required=True, help="model file written by `floqsim dem --out`")
    p.add_argument("--syndromes", required=True,
                   help="one shot per line (0/1 string or defect indices); prints one observable bit string "
                        "per shot, or '!' when the shot cannot be decoded")
    _add_decoder_args(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="per-shot decoding time vs code size")
    _add_code_args(p, ell=False)
    _add_decoder_args(p)
    p.add_argument("--ells", type=_ints, default=(1, 2, 3))
    p.add_argument("--p", type=float, default=2.2e-3)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoders", type=lambda s: tuple(s.split(",")), default=ex.DECODER_NAMES)
    p.add_argument("--out", help="timing CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("threshold", help="curve crossings across code sizes")
    _add_code_args(p, ell=False)
    _add_decoder_args(p)
    p.add_argument("--ells", type=_ints, default=(2, 3))
    p.add_argument("--p", type=_floats, default=(0.008, 0.01, 0.012, 0.015, 0.018, 0.021, 0.025))
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--out", help="CSV report path")
    p.set_defaults(func=cmd_threshold)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError, lat.TilingError, circ.CircuitError) as exc:
        print(f"floqsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
