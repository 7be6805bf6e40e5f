"""Detector-weight statistics of the compiled models (HF vs HCF).

    python3 scripts/weight_table.py [--ell 1] [--p 1e-3] [--out weights.csv]

Writes one CSV block per family with columns w,count,percent.
"""

import argparse
from pathlib import Path

from floqsim import dem as dem_mod
from floqsim import experiments as ex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ell", type=int, default=1)
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    blocks = []
    for family in ("hf", "hcf"):
        cfg = ex.ExperimentConfig(family=family, ell=args.ell, p=(args.p,))
        model, t = ex.build_model(cfg, args.p)
        raw = dem_mod.raw_weight_histogram(model)
        print(f"{family.upper()} n={t.n} {cfg.num_steps} steps: {len(model.mechanisms)} mechanisms, "
              f"{sum(c for c, _ in raw.values())} elementary faults")
        text = ex.histogram_csv(model)
        print(text)
        blocks.append(f"# {family} n={t.n}\n{text}")
    if args.out:
        args.out.write_text("".join(blocks))
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
