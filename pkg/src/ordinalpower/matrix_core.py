"""Exact joint and marginal distributions of ordinal potential outcomes.

Probabilities are :class:`fractions.Fraction` throughout; only the Hellinger
distance (which needs square roots) is returned as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction


class DegenerateAgreement(ValueError):
    """Raised when ``1 - p1' p0 == 0`` so that kappa is undefined."""


def _as_fractions(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


def _common_den(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


@dataclass(frozen=True)
class MarginalPair:
    """Treatment marginal ``p1`` and control marginal ``p0`` over J ordered categories.

    Category 0 is the worst outcome and ``J - 1`` the best.
    """

    p1: tuple[Fraction, ...]
    p0: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "p1", _as_fractions(self.p1))
        object.__setattr__(self, "p0", _as_fractions(self.p0))
        if len(self.p1) != len(self.p0):
            raise ValueError("p1 and p0 must have the same length")
        if len(self.p1) < 2:
            raise ValueError("need at least two categories")
        for name, vec in (("p1", self.p1), ("p0", self.p0)):
            if any(v < 0 for v in vec):
                raise ValueError(f"{name} has a negative entry")
            if sum(vec) != 1:
                raise ValueError(f"{name} sums to {sum(vec)}, not 1")

    @property
    def j(self) -> int:
        return len(self.p1)

    @classmethod
    def from_counts(cls, p1: Sequence[int], p0: Sequence[int], den: int) -> "MarginalPair":
        """Build from integer numerators over a shared denominator."""
        if den <= 0:
            raise ValueError("den must be positive")
        return cls(tuple(Fraction(c, den) for c in p1), tuple(Fraction(c, den) for c in p0))

    def agreement_by_chance(self) -> Fraction:
        """``p1' p0``, the chance agreement term of kappa."""
        return sum((a * b for a, b in zip(self.p1, self.p0)), Fraction(0))

    def swapped(self) -> "MarginalPair":
        return MarginalPair(self.p0, self.p1)

    def to_json(self) -> dict:
        den = _common_den(self.p1 + self.p0)
        return {
            "j": self.j,
            "den": den,
            "p1": [int(v * den) for v in self.p1],
            "p0": [int(v * den) for v in self.p0],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MarginalPair":
        mp = cls.from_counts(obj["p1"], obj["p0"], int(obj["den"]))
        if "j" in obj and int(obj["j"]) != mp.j:
            raise ValueError(f"declared j={obj['j']} but vectors have length {mp.j}")
        return mp


@dataclass(frozen=True)
class ProbMatrix:
    """J x J joint distribution; row index = treatment outcome, column = control outcome."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(_as_fractions(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        j = len(rows)
        if j < 2 or any(len(r) != j for r in rows):
            raise ValueError("entries must form a square matrix with J >= 2")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("probability matrix has a negative entry")
        total = sum(sum(r) for r in rows)
        if total != 1:
            raise ValueError(f"entries sum to {total}, not 1")

    @property
    def j(self) -> int:
        return len(self.entries)

    def __getitem__(self, kl: tuple[int, int]) -> Fraction:
        k, l = kl
        return self.entries[k][l]

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]], den: int) -> "ProbMatrix":
        return cls(tuple(tuple(Fraction(c, den) for c in row) for row in counts))

    @classmethod
    def diagonal(cls, d: Sequence) -> "ProbMatrix":
        d = _as_fractions(d)
        return cls(tuple(tuple(d[k] if k == l else Fraction(0) for l in range(len(d))) for k in range(len(d))))

    def trace(self) -> Fraction:
        return sum((self.entries[k][k] for k in range(self.j)), Fraction(0))

    def is_lower_triangular(self) -> bool:
        return all(self.entries[k][l] == 0 for k in range(self.j) for l in range(k + 1, self.j))

    def to_json(self) -> dict:
        den = _common_den(v for r in self.entries for v in r)
        return {"j": self.j, "den": den, "entries": [[int(v * den) for v in r] for r in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProbMatrix":
        m = cls.from_counts(obj["entries"], int(obj["den"]))
        if "j" in obj and int(obj["j"]) != m.j:
            raise ValueError(f"declared j={obj['j']} but matrix is {m.j}x{m.j}")
        return m


def marginals(m: ProbMatrix) -> MarginalPair:
    """Row sums (treatment marginal) and column sums (control marginal)."""
    j = m.j
    p1 = tuple(sum(m.entries[k], Fraction(0)) for k in range(j))
    p0 = tuple(sum((m.entries[k][l] for k in range(j)), Fraction(0)) for l in range(j))
    return MarginalPair(p1, p0)


def hellinger_distance(mp: MarginalPair) -> float:
    s = sum((math.sqrt(a) - math.sqrt(b)) ** 2 for a, b in zip(mp.p1, mp.p0))
    # float rounding can land a hair outside [0, 1]
    return min(1.0, math.sqrt(max(0.0, s / 2)))


def _kappa_from_trace(tr: Fraction, mp: MarginalPair) -> Fraction:
    chance = mp.agreement_by_chance()
    if chance == 1:
        raise DegenerateAgreement("p1'p0 = 1: both marginals are the same point mass; kappa undefined")
    return (tr - chance) / (1 - chance)


def cohens_kappa(m: ProbMatrix) -> Fraction:
    """Exact Cohen's kappa ``(tr P - p1'p0) / (1 - p1'p0)``."""
    return _kappa_from_trace(m.trace(), marginals(m))


def dominance_violation(mp: MarginalPair) -> int | None:
    """Smallest tail index ``j`` whose treatment upper tail is below the control's, else None."""
    failing = None
    tail1 = tail0 = Fraction(0)
    for j in range(mp.j - 1, 0, -1):
        tail1 += mp.p1[j]
        tail0 += mp.p0[j]
        if tail1 < tail0:
            failing = j
    return failing


def check_stochastic_dominance(mp: MarginalPair) -> bool:
    return dominance_violation(mp) is None
