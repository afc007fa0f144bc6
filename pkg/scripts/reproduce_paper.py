"""Run the four-case power study and print the summary.

    python3 scripts/reproduce_paper.py --out runs/desk
    python3 scripts/reproduce_paper.py --out runs/full --paper-fidelity --threads 8
"""

import argparse
import sys
from pathlib import Path

from ordinalpower.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--null-draws", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20151)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--paper-fidelity", action="store_true")
    args = ap.parse_args()

    argv = ["reproduce-paper", "--out", args.out, "--reps", str(args.reps),
            "--null-draws", str(args.null_draws), "--seed", str(args.seed),
            "--threads", str(args.threads), "-v"]
    if args.paper_fidelity:
        argv.append("--paper-fidelity")
    code = cli_main(argv)
    if code == 0:
        print((Path(args.out) / "summary.txt").read_text(), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
