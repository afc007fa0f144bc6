"""Rejection rate of the U^2 test when treatment does nothing.

Each population is diagonal (y1 == y0 for every unit) with the control
margins of a study case, so every rejection is a type I error.
"""

import argparse
import math

from ordinalpower.matrix_core import MarginalPair
from ordinalpower.power_study import Scenario, estimate_power, paper_cases


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", default="120,240")
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--null-draws", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    limit = args.alpha + 3 * math.sqrt(args.alpha * (1 - args.alpha) / args.reps)
    print(f"case  N    rate    (limit {limit:.4f})")
    for c in paper_cases():
        d = c.marginals.p0
        for n in map(int, args.ns.split(",")):
            s = Scenario(MarginalPair(d, d), n=n, n1=n // 2, lam=0, alpha=args.alpha,
                         replications=args.reps, null_draws=args.null_draws,
                         seed=args.seed + n, case_id=c.case_id)
            r = estimate_power(s)
            print(f"{c.case_id:>4}  {n:<4} {r.power:.4f}  {'ok' if r.power <= limit else 'HIGH'}")


if __name__ == "__main__":
    main()
