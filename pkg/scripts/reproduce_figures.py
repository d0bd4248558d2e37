"""Write the CSV tables behind every figure preset into one directory.

Example:
    python3 scripts/reproduce_figures.py --out figures --points 101
"""

from __future__ import annotations

import argparse
import sys
import time

from floquet_rabi import cli
from floquet_rabi.sweeps import PRESETS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--points", type=int, default=None, help="sweep points (preset default when omitted)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("presets", nargs="*", default=sorted(PRESETS))
    args = ap.parse_args()

    status = 0
    for name in args.presets:
        argv = ["fig", name, "--out", args.out, "--workers", str(args.workers)]
        if args.points and PRESETS[name]["kind"] == "sweep":
            argv += ["--points", str(args.points)]
        start = time.perf_counter()
        code = cli.main(argv)
        print(f"fig {name}: exit {code} in {time.perf_counter() - start:.1f} s", file=sys.stderr)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
