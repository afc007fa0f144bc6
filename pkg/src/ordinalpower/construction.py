"""Alternative-hypothesis probability matrices for fixed marginals.

The independence matrix has kappa 0, the lower-triangular maximizer attains
the kappa upper bound, and their convex blends fill in the values between.
For a finite population of N units a blend is floored onto the 1/N lattice;
the blend weights whose floored matrix keeps the treatment marginal form the
feasible set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .matrix_core import (
    DegenerateAgreement,
    MarginalPair,
    ProbMatrix,
    _kappa_from_trace,
    dominance_violation,
    marginals,
)


class DominanceViolated(ValueError):
    """The treatment marginal does not stochastically dominate the control marginal."""

    def __init__(self, tail_index: int):
        self.tail_index = tail_index
        super().__init__(
            f"stochastic dominance fails at tail index j={tail_index}: "
            f"sum(p1[{tail_index}:]) < sum(p0[{tail_index}:])"
        )


class WrongDimension(ValueError):
    pass


class LambdaOutOfRange(ValueError):
    pass


class LatticeViolation(ValueError):
    """N times some marginal probability is not an integer."""


DEFAULT_GRID: tuple[Fraction, ...] = tuple(Fraction(i, 100) for i in range(101))


@dataclass(frozen=True)
class BlendSpec:
    marginals: MarginalPair
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        if not 0 <= self.lam <= 1:
            raise LambdaOutOfRange(f"lambda={self.lam} outside [0, 1]")


@dataclass(frozen=True)
class CalibratedMatrix:
    """A blend floored onto the 1/N lattice whose row and column sums both survived."""

    matrix: ProbMatrix
    n: int
    lam: Fraction | None = None

    def counts(self) -> list[list[int]]:
        """Unit counts ``N * p_kl``."""
        return [[int(v * self.n) for v in row] for row in self.matrix.entries]

    def to_json(self) -> dict:
        out = {"j": self.matrix.j, "den": self.n, "entries": self.counts(), "n": self.n}
        try:
            kappa = _kappa_from_trace(self.matrix.trace(), marginals(self.matrix))
            out.update(kappa_num=kappa.numerator, kappa_den=kappa.denominator)
        except DegenerateAgreement:
            out.update(kappa_num=None, kappa_den=None)
        if self.lam is not None:
            out["lambda_num"] = self.lam.numerator
            out["lambda_den"] = self.lam.denominator
        return out


def _require_dominance(mp: MarginalPair) -> None:
    j = dominance_violation(mp)
    if j is not None:
        raise DominanceViolated(j)


def independent_minimizer(mp: MarginalPair) -> ProbMatrix:
    return ProbMatrix(tuple(tuple(a * b for b in mp.p0) for a in mp.p1))


def kappa_upper_bound(mp: MarginalPair) -> Fraction:
    """Largest kappa attainable by any joint distribution with these marginals."""
    agree = sum((min(a, b) for a, b in zip(mp.p1, mp.p0)), Fraction(0))
    return _kappa_from_trace(agree, mp)


def maximizer_general(mp: MarginalPair) -> ProbMatrix:
    """Lower-triangular kappa maximizer, built column by column from the right.

    Each diagonal cell takes ``min(p1[l], p0[l])``; the rest of column ``l``
    goes to the rows below, in proportion to the mass each of those rows has
    not yet placed.
    """
    _require_dominance(mp)
    j = mp.j
    p1, p0 = mp.p1, mp.p0
    cells = [[Fraction(0)] * j for _ in range(j)]
    # unplaced mass per row
    remaining = list(p1)
    for l in range(j - 1, -1, -1):
        diag = min(p1[l], p0[l])
        cells[l][l] = diag
        remaining[l] -= diag
        balance = p0[l] - diag
        if balance == 0:
            continue
        below = sum(remaining[l + 1:], Fraction(0))
        assert below > 0, "positive column balance with no mass left below the diagonal"
        for k in range(l + 1, j):
            share = remaining[k] / below * balance
            cells[k][l] = share
        for k in range(l + 1, j):
            remaining[k] -= cells[k][l]
    return ProbMatrix(tuple(tuple(r) for r in cells))


def maximizer_j2(mp: MarginalPair) -> ProbMatrix:
    if mp.j != 2:
        raise WrongDimension(f"maximizer_j2 needs J=2, got J={mp.j}")
    _require_dominance(mp)
    p1, p0 = mp.p1, mp.p0
    return ProbMatrix(((p1[0], 0), (p1[1] - p0[1], p0[1])))


def maximizer_j3(mp: MarginalPair) -> ProbMatrix:
    if mp.j != 3:
        raise WrongDimension(f"maximizer_j3 needs J=3, got J={mp.j}")
    _require_dominance(mp)
    p1, p0 = mp.p1, mp.p0
    mid = min(p0[1], p1[1])
    return ProbMatrix((
        (p1[0], 0, 0),
        (p1[1] - mid, mid, 0),
        (p1[2] - p0[2] - (p0[1] - mid), p0[1] - mid, p0[2]),
    ))


def blend(mp: MarginalPair, lam) -> ProbMatrix:
    """``lam * independence + (1 - lam) * maximizer``, entrywise and exact."""
    lam = BlendSpec(mp, lam).lam
    ind = independent_minimizer(mp)
    top = maximizer_general(mp)
    return ProbMatrix(tuple(
        tuple(lam * a + (1 - lam) * b for a, b in zip(ri, rt))
        for ri, rt in zip(ind.entries, top.entries)
    ))


def check_lattice(mp: MarginalPair, n: int) -> None:
    if n < 1:
        raise LatticeViolation(f"population size must be positive, got {n}")
    for name, vec in (("p1", mp.p1), ("p0", mp.p0)):
        for i, v in enumerate(vec):
            if (v * n).denominator != 1:
                raise LatticeViolation(f"N*{name}[{i}] = {v * n} is not an integer (N={n})")


def floor_to_lattice(m: ProbMatrix, n: int) -> ProbMatrix:
    """Floor off-diagonal cells to multiples of 1/N and give each column's lost mass to its diagonal.

    Column sums are preserved; row sums may not be.
    """
    j = m.j
    cells = [[Fraction(math.floor(n * m[k, l]), n) if k != l else None for l in range(j)] for k in range(j)]
    col = marginals(m).p0
    for l in range(j):
        cells[l][l] = col[l] - sum((cells[k][l] for k in range(j) if k != l), Fraction(0))
    return ProbMatrix(tuple(tuple(r) for r in cells))


def calibrate(m: ProbMatrix, n: int, lam=None) -> CalibratedMatrix | None:
    """Calibrate ``m`` to a population of ``n`` units.

    Returns None when the floored matrix no longer has the treatment marginal
    of ``m``; that blend weight is then not in the feasible set.
    """
    mp = marginals(m)
    check_lattice(mp, n)
    floored = floor_to_lattice(m, n)
    if marginals(floored).p1 != mp.p1:
        return None
    return CalibratedMatrix(floored, n, None if lam is None else Fraction(lam))


def feasible_lambda_set(
    mp: MarginalPair, n: int, grid: Iterable | None = None
) -> list[tuple[Fraction, CalibratedMatrix]]:
    """Grid points whose calibrated blend is feasible, in increasing lambda."""
    check_lattice(mp, n)
    points = sorted({Fraction(g) for g in (DEFAULT_GRID if grid is None else grid)})
    out = []
    for lam in points:
        cm = calibrate(blend(mp, lam), n, lam)
        if cm is not None:
            out.append((lam, cm))
    return out


def blend_kappa(mp: MarginalPair, lam) -> Fraction:
    """Kappa of the uncalibrated blend, ``(1 - lam) * kappa_upper_bound``."""
    return (1 - Fraction(lam)) * kappa_upper_bound(mp)
