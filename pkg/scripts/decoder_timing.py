"""Per-shot decoding time of MWPM and BP+OSD vs code size, with power-law fits.

    python3 scripts/decoder_timing.py [--family hf] [--ells 1,2,3,5] [--shots 2000] [--out timing.csv]
"""

import argparse
from pathlib import Path

from floqsim import experiments as ex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="hf", choices=("hf", "hcf"))
    ap.add_argument("--ells", type=lambda s: tuple(int(x) for x in s.split(",")), default=(1, 2, 3))
    ap.add_argument("--p", type=float, default=2.2e-3)
    ap.add_argument("--shots", type=int, default=2_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("timing.csv"))
    args = ap.parse_args()
    cfg = ex.ExperimentConfig(family=args.family, p=(args.p,), shots=args.shots, seed=args.seed)
    res = ex.timing_benchmark(cfg, args.ells)
    for r in res.rows:
        line = f"n={r.n:4d} {r.decoder:6s} mean {r.stats.mean * 1e6:10.1f} us  median {r.stats.median * 1e6:10.1f} us"
        if r.decoder == "bposd":
            line += (f"  BP-only {r.bp_only} ({r.bp_only_mean * 1e6:.0f} us)"
                     f"  OSD {r.osd_engaged} ({r.osd_mean * 1e6:.0f} us)")
        print(line)
    for name, f in res.fits.items():
        print(f"{name}: T = {f.beta:.3g} * n^{f.alpha:.3f}  (R^2 = {f.r2:.4f})")
    args.out.write_text(ex.timing_csv(res) + "\n" + ex.fit_table_csv(res.fits))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
