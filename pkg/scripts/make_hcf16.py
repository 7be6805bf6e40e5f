"""Regenerate the shipped hcf16 lattice file from its construction.

    python3 scripts/make_hcf16.py [output-path]
"""

import sys
from pathlib import Path

from floqsim.lattice import check_tiling, cube_double_cover, dumps


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "floqsim" / "data" / "hcf16.lattice"
    )
    out.write_text(dumps(check_tiling(cube_double_cover())), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
