"""Enumerate every integer table with given margins and compare max kappa to the bound.

    python3 scripts/kappa_polytope.py 3,3,6 5,5,2
"""

import sys
from collections import Counter
from fractions import Fraction
from itertools import product

from ordinalpower.construction import kappa_upper_bound
from ordinalpower.matrix_core import MarginalPair, ProbMatrix, cohens_kappa


def tables(row, col):
    j = len(row)
    # free cells are the top-left (j-1)x(j-1) block; the rest is forced by the margins
    for block in product(*(range(min(row[k], col[l]) + 1) for k in range(j - 1) for l in range(j - 1))):
        t = [list(block[k * (j - 1):(k + 1) * (j - 1)]) for k in range(j - 1)]
        for k in range(j - 1):
            t[k].append(row[k] - sum(t[k]))
        t.append([col[l] - sum(t[k][l] for k in range(j - 1)) for l in range(j)])
        if min(min(r) for r in t) >= 0 and sum(t[-1]) == row[-1]:
            yield t


def main():
    row = [int(x) for x in sys.argv[1].split(",")]
    col = [int(x) for x in sys.argv[2].split(",")]
    n = sum(row)
    mp = MarginalPair.from_counts(row, col, n)
    kappas = Counter(
        cohens_kappa(ProbMatrix([[Fraction(c, n) for c in r] for r in t])) for t in tables(row, col))
    print(f"{sum(kappas.values())} tables, {len(kappas)} distinct kappa values")
    print(f"max kappa {max(kappas)}  bound {kappa_upper_bound(mp)}  min kappa {min(kappas)}")


if __name__ == "__main__":
    main()
