"""Logical error rate of HF vs HCF at a fixed code size (MWPM, 48 steps).

    python3 scripts/hf_vs_hcf.py [--ell 3] [--p 3.7e-3] [--shots 100000] [--out hf_vs_hcf.csv]
"""

import argparse
from pathlib import Path

from floqsim import experiments as ex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ell", type=int, default=3)
    ap.add_argument("--p", type=lambda s: tuple(float(x) for x in s.split(",")), default=(3.7e-3,))
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--decoder", default="mwpm", choices=ex.DECODER_NAMES)
    ap.add_argument("--out", type=Path, default=Path("hf_vs_hcf.csv"))
    args = ap.parse_args()
    results = []
    for family in ("hcf", "hf"):
        cfg = ex.ExperimentConfig(family=family, ell=args.ell, p=args.p, shots=args.shots, seed=args.seed,
                                  decoder=args.decoder)
        r = ex.logical_error_rate(cfg)
        results.append(r)
        for pt in r.points:
            print(f"{family.upper()} n={r.num_qubits} p={pt.p:g}: P_L={pt.logical_error_rate:.4g} "
                  f"± {pt.std_error:.2g} ({pt.failures}/{pt.shots})")
    for a, b in zip(results[0].points, results[1].points):
        if b.failures:
            print(f"p={a.p:g}: P_L(HCF)/P_L(HF) = {a.logical_error_rate / b.logical_error_rate:.3f}")
    ex.report(results, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
