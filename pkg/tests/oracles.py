"""Brute-force reference computations, deliberately independent of the package code paths."""

from fractions import Fraction
from itertools import combinations


def count_tables(row, col):
    """Every nonnegative integer matrix with the given row and column sums."""
    row, col = list(row), list(col)
    j = len(col)

    def fill_rows(i, col_left):
        if i == len(row) - 1:
            if sum(col_left) == row[i]:
                yield [list(col_left)]
            return
        for r in compositions(row[i], col_left):
            rest = [c - x for c, x in zip(col_left, r)]
            for tail in fill_rows(i + 1, rest):
                yield [r] + tail

    def compositions(total, caps, k=0):
        if k == j - 1:
            if total <= caps[k]:
                yield [total]
            return
        for x in range(min(total, caps[k]) + 1):
            for rest in compositions(total - x, caps, k + 1):
                yield [x] + rest

    yield from fill_rows(0, col)


def kappa_of_counts(table):
    """Cohen's kappa computed straight from a count table, with exact fractions."""
    n = sum(map(sum, table))
    j = len(table)
    agree = Fraction(sum(table[k][k] for k in range(j)), n)
    rows = [Fraction(sum(table[k]), n) for k in range(j)]
    cols = [Fraction(sum(table[k][l] for k in range(j)), n) for l in range(j)]
    chance = sum(a * b for a, b in zip(rows, cols))
    return (agree - chance) / (1 - chance)


def u_by_units(treated, control):
    """Mann-Whitney style U from raw outcome lists: +1 per (t, c) with t > c, -1 with t < c."""
    return sum((t > c) - (t < c) for t in treated for c in control)


def exact_p_by_units(outcomes, treated_idx):
    """Fraction of all equal-size treated subsets whose U^2 is at least the observed one."""
    n = len(outcomes)
    n1 = len(treated_idx)

    def u2(idx):
        idx = set(idx)
        t = [outcomes[i] for i in idx]
        c = [outcomes[i] for i in range(n) if i not in idx]
        return u_by_units(t, c) ** 2

    obs = u2(treated_idx)
    subsets = list(combinations(range(n), n1))
    return Fraction(sum(u2(s) >= obs for s in subsets), len(subsets))
