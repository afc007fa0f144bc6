"""Monte Carlo power of the U^2 randomization test over (marginals, N, lambda) grids.

For each scenario the calibrated population is built once.  Each replicate
draws a complete randomization, observes the outcome table, computes the
randomization p-value and records whether it falls below alpha.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .construction import LatticeViolation, blend, blend_kappa, calibrate, check_lattice
from .matrix_core import MarginalPair, hellinger_distance
from .randomization import (
    DEFAULT_NULL_DRAWS,
    draw_assignment,
    make_rng,
    null_u2_sample,
    observe,
    p_value_from_null,
    population_from_matrix,
    u_squared,
)

PAPER_NS = (120, 160, 240)
PAPER_LAMBDAS = tuple(Fraction(i, 4) for i in range(5))
PAPER_REPLICATIONS = 200_000
DESK_REPLICATIONS = 10_000

CSV_FIELDS = (
    "case_id", "j", "n", "n1", "lambda", "kappa", "tau_hd", "alpha",
    "replications", "null_draws", "power", "mc_se", "seed", "status",
)


class InfeasibleScenario(ValueError):
    pass


@dataclass(frozen=True)
class PaperCase:
    case_id: int
    marginals: MarginalPair
    tau_hd: float


def paper_cases() -> list[PaperCase]:
    """The four marginal pairs of the simulation study with their quoted Hellinger distances."""
    F = Fraction
    return [
        PaperCase(1, MarginalPair((F(3, 10), F(7, 10)), (F(3, 5), F(2, 5))), 0.216),
        PaperCase(2, MarginalPair((F(1, 2), F(1, 2)), (F(4, 5), F(1, 5))), 0.227),
        PaperCase(3, MarginalPair((F(1, 4), F(1, 4), F(1, 2)), (F(2, 5), F(2, 5), F(1, 5))), 0.227),
        PaperCase(4, MarginalPair((F(9, 40), F(9, 40), F(11, 20)), (F(2, 5), F(2, 5), F(1, 5))), 0.261),
    ]


@dataclass(frozen=True)
class StudyConfig:
    alpha: float = 0.05
    replications: int = DESK_REPLICATIONS
    null_draws: int = DEFAULT_NULL_DRAWS
    # "half" for floor(N/2) treated units, or a fixed treated count
    n1: int | str = "half"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.null_draws < 1:
            raise ValueError("null_draws must be >= 1")
        if not (self.n1 == "half" or (isinstance(self.n1, int) and self.n1 > 0)):
            raise ValueError(f"n1 must be 'half' or a positive integer, got {self.n1!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def treated_count(self, n: int) -> int:
        return n // 2 if self.n1 == "half" else int(self.n1)

    def paper_fidelity(self) -> "StudyConfig":
        return replace(self, replications=PAPER_REPLICATIONS)


def scenario_seed(root: int, case_id: int, n: int, lam: Fraction) -> int:
    """64-bit scenario seed from the root seed and the scenario coordinates."""
    lam = Fraction(lam)
    ss = np.random.SeedSequence(root, spawn_key=(case_id, n, lam.numerator, lam.denominator))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Scenario:
    marginals: MarginalPair
    n: int
    n1: int
    lam: Fraction
    alpha: float = 0.05
    replications: int = DESK_REPLICATIONS
    null_draws: int = DEFAULT_NULL_DRAWS
    seed: int = 0
    case_id: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class PowerResult:
    case_id: int
    j: int
    n: int
    n1: int
    lam: Fraction
    kappa: Fraction
    tau_hd: float
    alpha: float
    replications: int
    null_draws: int
    seed: int
    status: str = "ok"
    rejected: int | None = None
    power: float | None = field(init=False, default=None)
    mc_se: float | None = field(init=False, default=None)

    def __post_init__(self):
        if self.rejected is not None:
            p = self.rejected / self.replications
            object.__setattr__(self, "power", p)
            object.__setattr__(self, "mc_se", math.sqrt(p * (1 - p) / self.replications))

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_row(self) -> list[str]:
        def fmt(x):
            return "" if x is None else f"{float(x):.6f}"

        return [
            str(self.case_id), str(self.j), str(self.n), str(self.n1),
            fmt(self.lam), fmt(self.kappa), fmt(self.tau_hd), f"{self.alpha:g}",
            str(self.replications), str(self.null_draws),
            fmt(self.power), fmt(self.mc_se), str(self.seed), self.status,
        ]


def _skeleton(s: Scenario, status: str, rejected: int | None) -> PowerResult:
    return PowerResult(
        case_id=s.case_id, j=s.marginals.j, n=s.n, n1=s.n1, lam=s.lam,
        kappa=blend_kappa(s.marginals, s.lam), tau_hd=hellinger_distance(s.marginals),
        alpha=s.alpha, replications=s.replications, null_draws=s.null_draws,
        seed=s.seed, status=status, rejected=rejected,
    )


def estimate_power(s: Scenario) -> PowerResult:
    """Rejection rate of the U^2 test at level alpha over ``s.replications`` randomizations."""
    check_lattice(s.marginals, s.n)
    cm = calibrate(blend(s.marginals, s.lam), s.n, s.lam)
    if cm is None:
        raise InfeasibleScenario(f"lambda={s.lam} is not in the feasible set at N={s.n}")
    pop = population_from_matrix(cm)
    rejected = 0
    for r in range(s.replications):
        table = observe(pop, draw_assignment(s.n, s.n1, make_rng(s.seed, r)))
        null = null_u2_sample(table.pooled, s.n1, s.null_draws, s.seed)
        if p_value_from_null(null, u_squared(table)) < s.alpha:
            rejected += 1
    return _skeleton(s, "ok", rejected)


def build_scenarios(
    cases: Sequence[MarginalPair], ns: Iterable[int], lambdas: Iterable, config: StudyConfig,
    case_ids: Sequence[int] | None = None,
) -> list[Scenario]:
    """Cross product ordered by (case, N, lambda) with derived per-scenario seeds."""
    ids = list(case_ids) if case_ids is not None else list(range(1, len(cases) + 1))
    lams = sorted({Fraction(x) for x in lambdas})
    out = []
    for cid, mp in zip(ids, cases):
        for n in sorted(set(ns)):
            for lam in lams:
                out.append(Scenario(
                    marginals=mp, n=n, n1=config.treated_count(n), lam=lam,
                    alpha=config.alpha, replications=config.replications,
                    null_draws=config.null_draws, seed=scenario_seed(config.seed, cid, n, lam),
                    case_id=cid,
                ))
    return out


def _run_one(s: Scenario) -> PowerResult:
    try:
        return estimate_power(s)
    except (InfeasibleScenario, LatticeViolation):
        # an N off the marginals' 1/N lattice admits no calibrated population at all
        return _skeleton(s, "skipped_infeasible", None)


def run_scenarios(scenarios: Sequence[Scenario], threads: int = 1) -> list[PowerResult]:
    if threads <= 1 or len(scenarios) <= 1:
        return [_run_one(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so output is canonical regardless of scheduling
        return list(pool.map(_run_one, scenarios))


def run_scenario_grid(
    cases: Sequence[MarginalPair], ns: Iterable[int], lambdas: Iterable, config: StudyConfig,
    case_ids: Sequence[int] | None = None,
) -> list[PowerResult]:
    """Power for every (case, N, lambda); infeasible lambdas come back as skipped rows."""
    return run_scenarios(build_scenarios(cases, ns, lambdas, config, case_ids), config.threads)


def results_to_csv(results: Iterable[PowerResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in results:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def results_from_csv(text: str) -> list[PowerResult]:
    """Parse rows written by :func:`results_to_csv`.

    ``lambda`` and ``kappa`` come back as the six-decimal values in the file.
    """
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        reps = int(row["replications"])
        rejected = round(float(row["power"]) * reps) if row["power"] else None
        out.append(PowerResult(
            case_id=int(row["case_id"]), j=int(row["j"]), n=int(row["n"]), n1=int(row["n1"]),
            lam=Fraction(row["lambda"]), kappa=Fraction(row["kappa"]), tau_hd=float(row["tau_hd"]),
            alpha=float(row["alpha"]), replications=reps, null_draws=int(row["null_draws"]),
            seed=int(row["seed"]), status=row["status"], rejected=rejected,
        ))
    return out


# -- qualitative checks on a finished grid ----------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _combined_se(a: PowerResult, b: PowerResult) -> float:
    return math.hypot(a.mc_se, b.mc_se)


def at_least(hi: PowerResult, lo: PowerResult, n_se: float = 2.0) -> bool:
    """``hi.power >= lo.power`` up to ``n_se`` combined Monte Carlo standard errors."""
    return hi.power >= lo.power - n_se * _combined_se(hi, lo)


def _index(results: Iterable[PowerResult]) -> dict[tuple[int, int, Fraction], PowerResult]:
    return {(r.case_id, r.n, r.lam): r for r in results if r.ok}


def case_dominance(results, better: int, worse: int, n_se: float = 2.0) -> Check:
    idx = _index(results)
    bad = []
    pairs = 0
    for (cid, n, lam), lo in sorted(idx.items()):
        if cid != worse or (better, n, lam) not in idx:
            continue
        pairs += 1
        hi = idx[(better, n, lam)]
        if not at_least(hi, lo, n_se):
            bad.append(f"N={n} lambda={lam}: {hi.power:.4f} < {lo.power:.4f}")
    return Check(f"case {better} dominates case {worse}", pairs > 0 and not bad,
                 f"{pairs} pairs compared" + ("; " + "; ".join(bad) if bad else ""))


def _monotone(results, axis: str, n_se: float) -> Check:
    groups: dict[tuple, list[PowerResult]] = {}
    for r in results:
        if not r.ok:
            continue
        key = (r.case_id, r.n) if axis == "lambda" else (r.case_id, r.lam)
        groups.setdefault(key, []).append(r)
    bad = []
    for key, rows in sorted(groups.items()):
        rows.sort(key=(lambda r: r.lam) if axis == "lambda" else (lambda r: r.n))
        for i, lo in enumerate(rows):
            for hi in rows[i + 1:]:
                if not at_least(hi, lo, n_se):
                    lo_at = lo.lam if axis == "lambda" else lo.n
                    hi_at = hi.lam if axis == "lambda" else hi.n
                    bad.append(f"{key}: {axis}={hi_at} {hi.power:.4f} < {axis}={lo_at} {lo.power:.4f}")
    return Check(f"power non-decreasing in {axis}", bool(groups) and not bad, "; ".join(bad))


def lambda_monotonicity(results, n_se: float = 2.0) -> Check:
    return _monotone(results, "lambda", n_se)


def n_monotonicity(results, n_se: float = 2.0) -> Check:
    return _monotone(results, "n", n_se)


def sample_size_claim(results, case_id: int = 3, small: int = 120, large: int = 160,
                      target: float = 0.95, n_se: float = 2.0) -> tuple[Check, list[tuple]]:
    """Lambdas where power misses ``target`` at ``small`` but reaches it at ``large``.

    Returns the check and one ``(lambda, power_small, power_large, holds)`` row per lambda.
    """
    idx = _index(results)
    rows = []
    for (cid, n, lam), lo in sorted(idx.items()):
        if cid != case_id or n != small or (case_id, large, lam) not in idx:
            continue
        hi = idx[(case_id, large, lam)]
        holds = lo.power - n_se * lo.mc_se < target and hi.power + n_se * hi.mc_se >= target
        rows.append((lam, lo.power, hi.power, holds))
    which = [str(r[0]) for r in rows if r[3]]
    return (Check(f"case {case_id}: power < {target} at N={small} and >= {target} at N={large}",
                  bool(which), "lambda in {" + ", ".join(which) + "}"), rows)


def paper_checks(results: Sequence[PowerResult], n_se: float = 2.0) -> list[Check]:
    return [
        case_dominance(results, 2, 1, n_se),
        case_dominance(results, 4, 3, n_se),
        lambda_monotonicity(results, n_se),
        n_monotonicity(results, n_se),
        sample_size_claim(results, n_se=n_se)[0],
    ]
