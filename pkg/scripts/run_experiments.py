"""Run every config in scripts/configs through the CLI.

    python3 scripts/run_experiments.py [-j WORKERS] [--only NAME ...] [--samples N]
"""

import argparse
import sys
import time
from pathlib import Path

from frackorn.cli import main as cli_main

CONFIG_DIR = Path(__file__).parent / "configs"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-j", "--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="config stems to run")
    ap.add_argument("--samples", type=int, help="override the sample count of every config")
    ap.add_argument("--out", help="root directory replacing results/")
    args = ap.parse_args()

    status = 0
    for cfg in sorted(CONFIG_DIR.glob("*.cfg")):
        if args.only and cfg.stem not in args.only:
            continue
        argv = ["--config", str(cfg), "-j", str(args.workers)]
        if args.samples:
            argv += ["--set", f"samples={args.samples}"]
        if args.out:
            argv += ["-o", str(Path(args.out) / cfg.stem)]
        t0 = time.perf_counter()
        code = cli_main(argv)
        print(f"{cfg.stem}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
