"""Threshold sweep: HCF, one six-step period, MWPM, several sizes.

    python3 scripts/threshold.py [--ells 2,3,5] [--shots 10000] [--out threshold.csv]
"""

import argparse
from pathlib import Path

from floqsim import experiments as ex

GRID = (0.008, 0.01, 0.012, 0.015, 0.018, 0.021, 0.025)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="hcf", choices=("hf", "hcf"))
    ap.add_argument("--ells", type=lambda s: tuple(int(x) for x in s.split(",")), default=(2, 3, 5))
    ap.add_argument("--periods", type=int, default=1)
    ap.add_argument("--p", type=lambda s: tuple(float(x) for x in s.split(",")), default=GRID)
    ap.add_argument("--shots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bootstrap", type=int, default=200)
    ap.add_argument("--out", type=Path, default=Path("threshold.csv"))
    args = ap.parse_args()
    cfg = ex.ExperimentConfig(family=args.family, periods=args.periods, p=args.p, shots=args.shots,
                              seed=args.seed)
    results, est = ex.threshold_sweep(cfg, args.ells, bootstrap=args.bootstrap)
    for r in results:
        print(f"n={r.num_qubits}: " + "  ".join(f"{pt.p:g}:{pt.logical_error_rate:.4g}" for pt in r.points))
    curves = [ex.Curve.from_result(r) for r in results]
    for a, b in zip(curves, curves[1:]):
        e = ex.threshold_estimate([a, b], bootstrap=args.bootstrap, seed=args.seed)
        if e.crossed:
            print(f"n={a.size}/{b.size}: crossing {e.low:.4f} (bootstrap 95% [{e.bootstrap_low}, {e.bootstrap_high}])")
        else:
            print(f"n={a.size}/{b.size}: no crossing ({e.flag})")
    if est.crossed:
        print(f"all pairs: [{est.low:.4f}, {est.high:.4f}]")
    ex.report(results, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
