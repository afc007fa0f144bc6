"""Finite populations, complete randomization and the U^2 randomization test."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .construction import CalibratedMatrix

DEFAULT_NULL_DRAWS = 10_000
EXACT_LIMIT = 10**6
# spawn-key tag separating null-distribution streams from replicate streams
_NULL_STREAM = 0x4E554C4C


class InvalidDesign(ValueError):
    pass


class SizeMismatch(ValueError):
    pass


def make_rng(seed, *key: int) -> np.random.Generator:
    """Generator for ``seed`` refined by an integer key path.

    ``seed`` may be an int, a SeedSequence, a Generator (used as is when no key
    is given) or None for fresh entropy.
    """
    if isinstance(seed, np.random.Generator):
        if key:
            raise TypeError("cannot derive keyed streams from a Generator")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class FinitePopulation:
    """N units with potential outcomes ``y1`` (treated) and ``y0`` (control)."""

    y1: np.ndarray
    y0: np.ndarray
    j: int

    def __post_init__(self):
        y1 = np.asarray(self.y1, dtype=np.int64).copy()
        y0 = np.asarray(self.y0, dtype=np.int64).copy()
        if y1.shape != y0.shape or y1.ndim != 1:
            raise SizeMismatch("y1 and y0 must be 1-d arrays of equal length")
        if len(y1) and (min(y1.min(), y0.min()) < 0 or max(y1.max(), y0.max()) >= self.j):
            raise ValueError(f"outcomes must lie in 0..{self.j - 1}")
        y1.setflags(write=False)
        y0.setflags(write=False)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y0", y0)

    @property
    def n(self) -> int:
        return len(self.y1)

    @property
    def units(self) -> list[tuple[int, int]]:
        return list(zip(self.y1.tolist(), self.y0.tolist()))

    def pair_counts(self) -> np.ndarray:
        counts = np.zeros((self.j, self.j), dtype=np.int64)
        np.add.at(counts, (self.y1, self.y0), 1)
        return counts

    def is_sharp_null(self) -> bool:
        return bool(np.all(self.y1 == self.y0))


@dataclass(frozen=True, eq=False)
class Assignment:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=bool).copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n1(self) -> int:
        return int(self.w.sum())


@dataclass(frozen=True)
class ObservedTable:
    """Outcome counts by arm: ``n1[j]`` treated and ``n0[j]`` control units observed at ``j``."""

    n1: tuple[int, ...]
    n0: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n1", tuple(int(c) for c in self.n1))
        object.__setattr__(self, "n0", tuple(int(c) for c in self.n0))
        if len(self.n1) != len(self.n0):
            raise SizeMismatch("n1 and n0 must have the same length")
        if any(c < 0 for c in self.n1 + self.n0):
            raise ValueError("counts must be nonnegative")

    @property
    def j(self) -> int:
        return len(self.n1)

    @property
    def pooled(self) -> tuple[int, ...]:
        return tuple(a + b for a, b in zip(self.n1, self.n0))

    def to_csv_row(self) -> str:
        return ",".join(str(v) for v in (self.j, *self.n1, *self.n0))

    @classmethod
    def from_csv_row(cls, row: str) -> "ObservedTable":
        vals = [int(v) for v in row.strip().split(",")]
        j = vals[0]
        if len(vals) != 1 + 2 * j:
            raise ValueError(f"expected {1 + 2 * j} fields for j={j}, got {len(vals)}")
        return cls(tuple(vals[1:1 + j]), tuple(vals[1 + j:]))


def population_from_matrix(cm: CalibratedMatrix) -> FinitePopulation:
    """Expand a calibrated matrix into units, sorted by ``(y1, y0)``."""
    counts = cm.counts()
    j = len(counts)
    y1, y0 = [], []
    for k in range(j):
        for l in range(j):
            y1 += [k] * counts[k][l]
            y0 += [l] * counts[k][l]
    return FinitePopulation(np.array(y1), np.array(y0), j)


def draw_assignment(n: int, n1: int, seed=None) -> Assignment:
    """Completely randomized design: a uniform subset of ``n1`` of ``n`` units is treated."""
    if not 0 < n1 < n:
        raise InvalidDesign(f"need 0 < n1 < n, got n={n}, n1={n1}")
    rng = make_rng(seed)
    w = np.zeros(n, dtype=bool)
    w[rng.permutation(n)[:n1]] = True
    return Assignment(w)


def observe(pop: FinitePopulation, a: Assignment) -> ObservedTable:
    if len(a.w) != pop.n:
        raise SizeMismatch(f"assignment has {len(a.w)} units, population has {pop.n}")
    n1 = np.bincount(pop.y1[a.w], minlength=pop.j)
    n0 = np.bincount(pop.y0[~a.w], minlength=pop.j)
    return ObservedTable(tuple(n1), tuple(n0))


def _u_batch(n1: np.ndarray, n0: np.ndarray) -> np.ndarray:
    """U over the last axis: each treated unit scores +1 per control below it, -1 per control above."""
    cum0 = np.cumsum(n0, axis=-1)
    below = cum0 - n0
    above = cum0[..., -1:] - cum0
    return np.sum(n1 * (below - above), axis=-1)


def u_statistic(t: ObservedTable) -> int:
    return int(_u_batch(np.array(t.n1, dtype=np.int64), np.array(t.n0, dtype=np.int64)))


def u_squared(t: ObservedTable) -> int:
    u = u_statistic(t)
    return u * u


def _check_design(pooled: Sequence[int], n1: int) -> None:
    n = sum(pooled)
    if not 0 < n1 < n:
        raise InvalidDesign(f"need 0 < n1 < N, got N={n}, n1={n1}")


def _sample_null(pooled: tuple[int, ...], n1: int, m: int, rng: np.random.Generator) -> np.ndarray:
    colors = np.array(pooled, dtype=np.int64)
    treated = rng.multivariate_hypergeometric(colors, n1, size=m)
    u = _u_batch(treated, colors - treated)
    return np.sort(u * u)


@functools.lru_cache(maxsize=8192)
def _cached_null(pooled: tuple[int, ...], n1: int, m: int, seed: int) -> np.ndarray:
    null = _sample_null(pooled, n1, m, make_rng(seed, _NULL_STREAM, n1, *pooled))
    null.setflags(write=False)
    return null


def null_u2_sample(pooled: Sequence[int], n1: int, m: int, seed=None) -> np.ndarray:
    """Sorted U^2 values of ``m`` random treated/control splits of the pooled counts.

    With an integer seed the draw depends only on ``(pooled, n1, m, seed)`` and
    is memoized, so tables sharing pooled counts share one null sample.
    """
    pooled = tuple(int(c) for c in pooled)
    _check_design(pooled, n1)
    if m < 1:
        raise ValueError("need at least one null draw")
    if isinstance(seed, (int, np.integer)):
        return _cached_null(pooled, n1, m, int(seed))
    return _sample_null(pooled, n1, m, make_rng(seed))


def _treated_splits(pooled: Sequence[int], n1: int):
    """All treated count vectors t with 0 <= t <= pooled and sum(t) = n1."""
    j = len(pooled)
    suffix = [sum(pooled[i:]) for i in range(j)] + [0]

    def rec(i, left):
        if i == j - 1:
            if left <= pooled[i]:
                yield (left,)
            return
        lo = max(0, left - suffix[i + 1])
        for t in range(lo, min(pooled[i], left) + 1):
            for rest in rec(i + 1, left - t):
                yield (t, *rest)

    return rec(0, n1)


def exact_null_distribution(pooled: Sequence[int], n1: int, limit: int = EXACT_LIMIT) -> dict[int, Fraction]:
    """Exact law of U^2 under complete randomization, as ``{u2: probability}``."""
    pooled = tuple(int(c) for c in pooled)
    _check_design(pooled, n1)
    n = sum(pooled)
    total = math.comb(n, n1)
    dist: dict[int, int] = {}
    for i, t in enumerate(_treated_splits(pooled, n1)):
        if i >= limit:
            raise InvalidDesign(f"more than {limit} distinct splits; use Monte Carlo")
        ways = math.prod(math.comb(c, k) for c, k in zip(pooled, t))
        u = int(_u_batch(np.array(t), np.array(pooled) - np.array(t)))
        dist[u * u] = dist.get(u * u, 0) + ways
    return {u2: Fraction(w, total) for u2, w in sorted(dist.items())}


def exact_p_value(t: ObservedTable) -> Fraction:
    """``P(U^2 >= observed)`` over every assignment of the observed design."""
    obs = u_squared(t)
    dist = exact_null_distribution(t.pooled, sum(t.n1))
    return sum((p for u2, p in dist.items() if u2 >= obs), Fraction(0))


def randomization_p_value(
    t: ObservedTable,
    n1: int | None = None,
    m: int = DEFAULT_NULL_DRAWS,
    seed=None,
    method: str = "monte_carlo",
) -> float:
    """Randomization p-value of U^2 under the sharp null.

    ``method="monte_carlo"`` returns ``(1 + #{null >= observed}) / (m + 1)``
    from ``m`` multivariate-hypergeometric splits of the pooled counts;
    ``method="exact"`` enumerates all splits instead.
    """
    if n1 is None:
        n1 = sum(t.n1)
    elif n1 != sum(t.n1):
        raise InvalidDesign(f"table has {sum(t.n1)} treated units, expected {n1}")
    if method == "exact":
        return float(exact_p_value(t))
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    null = null_u2_sample(t.pooled, n1, m, seed)
    return p_value_from_null(null, u_squared(t))


def p_value_from_null(sorted_null: np.ndarray, obs: int) -> float:
    at_least = len(sorted_null) - int(np.searchsorted(sorted_null, obs, side="left"))
    return (1 + at_least) / (len(sorted_null) + 1)
