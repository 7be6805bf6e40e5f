"""MWPM vs BP+OSD for both families at one size (48 steps).

    python3 scripts/decoder_comparison.py [--ell 2] [--p 3.2e-3] [--shots 100000] [--out decoders.csv]
"""

import argparse
from pathlib import Path

from floqsim import experiments as ex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--p", type=lambda s: tuple(float(x) for x in s.split(",")), default=(3.2e-3,))
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--osd-order", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("decoders.csv"))
    args = ap.parse_args()
    results = {}
    for family in ("hcf", "hf"):
        for decoder in ex.DECODER_NAMES:
            cfg = ex.ExperimentConfig(family=family, ell=args.ell, p=args.p, shots=args.shots, seed=args.seed,
                                      decoder=decoder, osd_order=args.osd_order)
            results[family, decoder] = ex.logical_error_rate(cfg)
    for family in ("hcf", "hf"):
        for i, p in enumerate(args.p):
            mw = results[family, "mwpm"].points[i].logical_error_rate
            bp = results[family, "bposd"].points[i].logical_error_rate
            ratio = f"{mw / bp:.3f}" if bp else "inf"
            print(f"{family.upper()} p={p:g}: MWPM {mw:.4g}  BP+OSD {bp:.4g}  MWPM/BP+OSD {ratio}")
    ex.report(list(results.values()), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
