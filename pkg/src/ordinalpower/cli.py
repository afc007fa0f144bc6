"""Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 infeasible lambda.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .construction import (
    DEFAULT_GRID,
    DominanceViolated,
    LambdaOutOfRange,
    LatticeViolation,
    blend,
    calibrate,
    feasible_lambda_set,
    independent_minimizer,
    kappa_upper_bound,
    maximizer_general,
)
from .matrix_core import DegenerateAgreement, MarginalPair, ProbMatrix, cohens_kappa, hellinger_distance
from .power_study import (
    PAPER_LAMBDAS,
    PAPER_NS,
    StudyConfig,
    paper_cases,
    paper_checks,
    results_to_csv,
    run_scenario_grid,
    sample_size_claim,
)

log = logging.getLogger("ordinalpower")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    marginals: list[Path] = field(default_factory=list)
    paper_cases: bool = False
    ns: list[int] = field(default_factory=list)
    lambdas: list[Fraction] = field(default_factory=list)
    grid: list[Fraction] | None = None
    n1: int | str = "half"
    alpha: float = 0.05
    reps: int | None = None
    null_draws: int = 10_000
    seed: int = 0
    threads: int = 1
    paper_fidelity: bool = False
    out: Path | None = None

    def study(self) -> StudyConfig:
        cfg = StudyConfig(alpha=self.alpha, null_draws=self.null_draws, n1=self.n1,
                          seed=self.seed, threads=self.threads)
        # --paper-fidelity wins over an explicit replication count
        if self.paper_fidelity:
            return cfg.paper_fidelity()
        if self.reps is not None:
            return replace(cfg, replications=self.reps)
        return cfg


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {text!r}") from exc


def _rational_list(text: str) -> list[Fraction]:
    return [parse_rational(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"not a list of integers: {text!r}") from exc


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {text!r}")


def read_config_file(path: Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{i}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply(cfg: RunConfig, key: str, value: str, base: Path) -> None:
    try:
        if key == "marginals":
            cfg.marginals = [base / p.strip() for p in value.split(",") if p.strip()]
        elif key == "cases":
            if value.strip() != "paper":
                raise InputError("only 'cases = paper' is recognised")
            cfg.paper_cases = True
        elif key in ("n", "ns"):
            cfg.ns = _int_list(value)
        elif key in ("lambda", "lambdas"):
            cfg.lambdas = _rational_list(value)
        elif key == "grid":
            cfg.grid = _rational_list(value)
        elif key == "n1":
            cfg.n1 = "half" if value.strip() == "half" else int(value)
        elif key == "alpha":
            cfg.alpha = float(value)
        elif key in ("reps", "replications"):
            cfg.reps = int(value)
        elif key == "null_draws":
            cfg.null_draws = int(value)
        elif key == "seed":
            cfg.seed = int(value)
        elif key == "threads":
            cfg.threads = int(value)
        elif key == "paper_fidelity":
            cfg.paper_fidelity = _bool(value)
        elif key == "out":
            cfg.out = base / value.strip()
        else:
            raise InputError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise InputError(f"bad value for {key}: {value!r}") from exc


def build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config is not None:
        path = Path(args.config)
        for key, value in read_config_file(path).items():
            _apply(cfg, key, value, path.parent)
    # flags take precedence over the config file
    if args.marginals is not None:
        cfg.marginals = [Path(args.marginals)]
    if args.n is not None:
        cfg.ns = [args.n]
    if args.lam is not None:
        cfg.lambdas = [parse_rational(args.lam)]
    if getattr(args, "grid", None) is not None:
        cfg.grid = _rational_list(args.grid)
    if args.n1 is not None:
        cfg.n1 = args.n1
    for name in ("alpha", "reps", "null_draws", "seed", "threads"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.paper_fidelity:
        cfg.paper_fidelity = True
    if args.out is not None:
        cfg.out = Path(args.out)

    if not 0 < cfg.alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    if not 0 <= cfg.seed < 2**64:
        raise InputError("seed must be an unsigned 64-bit integer")
    if cfg.threads < 1 or cfg.null_draws < 1 or (cfg.reps is not None and cfg.reps < 1):
        raise InputError("threads, reps and null-draws must be positive")
    if any(not 0 <= lam <= 1 for lam in cfg.lambdas + (cfg.grid or [])):
        raise InputError("lambda values must lie in [0, 1]")
    return cfg


def load_marginals(path: Path) -> MarginalPair:
    try:
        return MarginalPair.from_json(json.loads(path.read_text()))
    except OSError as exc:
        raise InputError(f"cannot read marginals {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"invalid marginals file {path}: {exc}") from exc


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from exc


def _single_marginals(cfg: RunConfig) -> MarginalPair:
    if len(cfg.marginals) != 1:
        raise InputError("exactly one --marginals file is required")
    return load_marginals(cfg.marginals[0])


def _matrix_json(m: ProbMatrix) -> dict:
    out = m.to_json()
    try:
        k = cohens_kappa(m)
        out.update(kappa_num=k.numerator, kappa_den=k.denominator)
    except DegenerateAgreement:
        out.update(kappa_num=None, kappa_den=None)
    return out


def cmd_construct(cfg: RunConfig) -> int:
    mp = _single_marginals(cfg)
    if len(cfg.lambdas) != 1 or len(cfg.ns) != 1:
        raise InputError("construct needs one --lambda and one --n")
    lam, n = cfg.lambdas[0], cfg.ns[0]
    top = maximizer_general(mp)
    mixed = blend(mp, lam)
    cm = calibrate(mixed, n, lam)
    if cm is None:
        log.error("lambda=%s is infeasible at N=%d: calibrated row sums differ from p1", lam, n)
        return EXIT_INFEASIBLE
    bound = kappa_upper_bound(mp)
    blend_json = _matrix_json(mixed)
    blend_json.update(lambda_num=lam.numerator, lambda_den=lam.denominator)
    doc = {
        "marginals": mp.to_json(),
        "tau_hd": hellinger_distance(mp),
        "kappa_upper_bound": {"num": bound.numerator, "den": bound.denominator},
        "independent": _matrix_json(independent_minimizer(mp)),
        "maximizer": _matrix_json(top),
        "blend": blend_json,
        "calibrated": cm.to_json(),
    }
    _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    return EXIT_OK


def cmd_feasible_lambda(cfg: RunConfig) -> int:
    mp = _single_marginals(cfg)
    if len(cfg.ns) != 1:
        raise InputError("feasible-lambda needs one --n")
    n = cfg.ns[0]
    grid = cfg.grid or cfg.lambdas or list(DEFAULT_GRID)
    found = feasible_lambda_set(mp, n, grid)
    doc = {
        "marginals": mp.to_json(),
        "n": n,
        "grid_size": len(set(grid)),
        "feasible": [cm.to_json() for _, cm in found],
    }
    _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    return EXIT_OK if found else EXIT_INFEASIBLE


def cmd_power(cfg: RunConfig) -> int:
    if cfg.paper_cases:
        cases = [c.marginals for c in paper_cases()]
    elif cfg.marginals:
        cases = [load_marginals(p) for p in cfg.marginals]
    else:
        raise InputError("power needs --marginals or 'cases = paper' in the config")
    ns = cfg.ns or list(PAPER_NS)
    lambdas = cfg.lambdas or list(PAPER_LAMBDAS)
    results = run_scenario_grid(cases, ns, lambdas, cfg.study())
    _emit(results_to_csv(results), cfg.out)
    return EXIT_OK


def _summary(results, cfg: StudyConfig) -> str:
    lines = [
        f"replications={cfg.replications} null_draws={cfg.null_draws} alpha={cfg.alpha:g} "
        f"n1={cfg.n1} seed={cfg.seed}",
        "",
        "hellinger distance (computed vs quoted)",
    ]
    for c in paper_cases():
        tau = hellinger_distance(c.marginals)
        ok = abs(tau - c.tau_hd) <= 5e-4
        lines.append(f"  case {c.case_id}: {tau:.6f} vs {c.tau_hd:.3f} {'PASS' if ok else 'FAIL'}")
    lines += ["", "checks (2 combined Monte Carlo standard errors)"]
    for check in paper_checks(results):
        lines.append(f"  {'PASS' if check.passed else 'FAIL'} {check.name}"
                     + (f" [{check.detail}]" if check.detail else ""))
    lines += ["", "case 3 power by lambda: N=120, N=160, claim holds"]
    for lam, lo, hi, holds in sample_size_claim(results)[1]:
        lines.append(f"  lambda={lam}: {lo:.4f} {hi:.4f} {'yes' if holds else 'no'}")
    return "\n".join(lines) + "\n"


def cmd_reproduce_paper(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise InputError("reproduce-paper needs --out DIR")
    study = cfg.study()
    cases = paper_cases()
    results = run_scenario_grid([c.marginals for c in cases], PAPER_NS, PAPER_LAMBDAS, study,
                                case_ids=[c.case_id for c in cases])
    out = cfg.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "power.csv").write_text(results_to_csv(results))
        for c in cases:
            rows = [r for r in results if r.case_id == c.case_id]
            (out / f"case_{c.case_id}.csv").write_text(results_to_csv(rows))
        (out / "summary.txt").write_text(_summary(results, study))
    except OSError as exc:
        raise InputError(f"cannot write to {out}: {exc}") from exc
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "feasible-lambda": cmd_feasible_lambda,
    "power": cmd_power,
    "reproduce-paper": cmd_reproduce_paper,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--marginals", help="marginals JSON: {j, den, p1, p0}")
    common.add_argument("--lambda", dest="lam", metavar="RAT", help="blend weight, e.g. 1/4")
    common.add_argument("--n", type=int, help="population size N")
    common.add_argument("--n1", type=int, help="treated units (default N/2)")
    common.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    common.add_argument("--reps", type=int, help="Monte Carlo replications R")
    common.add_argument("--null-draws", type=int, help="null draws m per p-value")
    common.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, help="worker processes; output does not depend on it")
    common.add_argument("--paper-fidelity", action="store_true", help="R = 2e5 replications")
    common.add_argument("--out", help="output file (directory for reproduce-paper)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ordinalpower", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("construct", parents=[common], help="build extremal, blended and calibrated matrices")
    fl = sub.add_parser("feasible-lambda", parents=[common], help="grid search for feasible lambdas")
    fl.add_argument("--grid", help="comma-separated lambdas (default 0, 0.01, ..., 1)")
    sub.add_parser("power", parents=[common], help="power of the U^2 test over a scenario grid")
    sub.add_parser("reproduce-paper", parents=[common], help="full four-case simulation study")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = build_run_config(args)
        return COMMANDS[args.command](cfg)
    except DominanceViolated as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (InputError, LatticeViolation, LambdaOutOfRange, DegenerateAgreement, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
