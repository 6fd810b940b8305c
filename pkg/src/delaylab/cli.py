"""Command-line front end: run, validate, corpus, and sweep.

Exit codes are part of the contract:
  0  success (all declared checks pass)
  1  a declared check failed
  2  input error (bad arguments or a scenario that fails to parse)
  3  numeric failure (nonconvergent fixed point, no consensus root bracket)
  4  I/O failure (output location cannot be written)

Outputs carry no timestamps or absolute paths, so identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .analysis import VerificationReport, _fmt, analyze_run, semistability_sweep
from .corpus import builtin_scenarios, evaluate_expectations
from .delays import max_bound
from .integrator import IntegrationResult, NonconvergentStepError, integrate
from .network import validate_laplacian_structure
from .scenario import Scenario, ScenarioError

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


# -- shared runners -----------------------------------------------------------------

def execute_scenario(scenario: Scenario, step: float | None = None
                     ) -> tuple[IntegrationResult, VerificationReport]:
    """Integrate a scenario and assemble its verification report."""
    system = scenario.build_system()
    history = scenario.build_history()
    config = scenario.config_with_step(step)
    result = integrate(system, scenario.profiles, history, config)
    report = analyze_run(system, scenario.profiles, history, result,
                         name=scenario.name,
                         convergence_tol=scenario.convergence_tol,
                         razumikhin_slack=scenario.razumikhin_slack)
    return result, report


def write_run_outputs(scenario: Scenario, result: IntegrationResult,
                      report: VerificationReport, out_root: str) -> str:
    """Write trajectory/report/series files under out_root/<name>/."""
    run_dir = os.path.join(out_root, scenario.name)
    os.makedirs(run_dir, exist_ok=True)
    every = scenario.integration.record_every
    result.trajectory.write_csv(os.path.join(run_dir, "trajectory.csv"),
                                every=every)
    report.write(run_dir, every=every)
    scenario.write(os.path.join(run_dir, "scenario.json"))
    return run_dir


def _g(value: float | None, width: int = 12) -> str:
    if value is None:
        return "none".rjust(width)
    if isinstance(value, float) and math.isinf(value):
        return "inf".rjust(width)
    return ("%.6g" % value).rjust(width)


# -- run ----------------------------------------------------------------------------

def _cmd_run(args: argparse.Namespace) -> int:
    scenario = Scenario.from_file(args.file)
    result, report = execute_scenario(scenario)
    run_dir = write_run_outputs(scenario, result, report, args.out)
    sys.stdout.write(report.to_text())
    sys.stdout.write(f"wrote {os.path.join(args.out, scenario.name)}\n")
    expected = scenario.expect.converged
    if expected is not None and report.converged != expected:
        sys.stdout.write(f"check failed: expected converged = "
                         f"{_fmt(expected)}, got {_fmt(report.converged)}\n")
        return EXIT_CHECK
    return EXIT_OK


# -- validate -----------------------------------------------------------------------

def _cmd_validate(args: argparse.Namespace) -> int:
    scenario = Scenario.from_file(args.file)
    system = scenario.build_system()
    rows: list[tuple[str, bool, str]] = []

    lap = validate_laplacian_structure(system.matrices)
    rows.append(("row_sums_zero", lap.row_sums_zero, ""))
    rows.append(("col_sums_zero", lap.col_sums_zero, ""))
    rows.append(("nonnegative_coupling", lap.nonnegative_coupling, ""))
    rows.append(("rank_is_n_minus_1", lap.rank_is_n_minus_1,
                 f"rank = {lap.rank}"))

    tol = 1e-12
    min_tau = math.inf
    min_margin = math.inf
    for profile in scenario.profiles:
        tau_lo, margin = profile.bound_margin()
        min_tau = min(min_tau, tau_lo)
        min_margin = min(min_margin, margin)
    rows.append(("delay_nonnegative", min_tau >= -tol,
                 "min tau = %.6g" % min_tau))
    rows.append(("delay_bounded", min_margin >= -tol,
                 "min bound margin = %.6g" % min_margin))
    limit_ok, limit_note = True, ""
    for k, profile in enumerate(scenario.profiles):
        try:
            profile.limit()
        except ValueError:
            limit_ok = False
            limit_note = f"profile {k + 1} declares no limit"
    rows.append(("delay_limit_defined", limit_ok, limit_note))
    horizon = scenario.history_horizon()
    need = max_bound(scenario.profiles)
    rows.append(("history_coverage", horizon + tol >= need,
                 "horizon = %.6g, max delay bound = %.6g" % (horizon, need)))

    all_ok = True
    for name, ok, note in rows:
        all_ok = all_ok and ok
        line = f"{name:<22} {'pass' if ok else 'fail'}"
        if note and not ok:
            line += f"  ({note})"
        sys.stdout.write(line + "\n")
    sys.stdout.write(f"{'all checks pass' if all_ok else 'validation failed'}\n")
    return EXIT_OK if all_ok else EXIT_CHECK


# -- corpus -------------------------------------------------------------------------

def _corpus_worker(payload: tuple[Scenario, float | None, str]
                   ) -> dict[str, object]:
    scenario, step, out_root = payload
    row: dict[str, object] = {"scenario": scenario.name,
                              "alpha_predicted": None, "alpha_observed": None,
                              "alpha_gap": None, "residual_decay_factor": None,
                              "razumikhin_violations": None,
                              "conservation_drift": None,
                              "passed": False, "detail": ""}
    try:
        result, report = execute_scenario(scenario, step)
    except (ValueError, RuntimeError) as exc:
        row["detail"] = f"error: {exc}"
        return row
    write_run_outputs(scenario, result, report, out_root)
    scale = 1.0 if step is None else 10.0
    failures = evaluate_expectations(scenario, report, tolerance_scale=scale)
    row.update(
        alpha_predicted=report.alpha_predicted,
        alpha_observed=report.alpha_observed,
        alpha_gap=report.alpha_gap,
        residual_decay_factor=report.residual_decay,
        razumikhin_violations=report.razumikhin.violation_count,
        conservation_drift=(None if report.conserved is None
                            else report.conserved.drift),
        passed=not failures,
        detail="; ".join(failures),
    )
    return row


_SUMMARY_FIELDS = ("scenario", "alpha_predicted", "alpha_observed",
                   "alpha_gap", "residual_decay_factor",
                   "razumikhin_violations", "conservation_drift", "passed")


def _cmd_corpus(args: argparse.Namespace) -> int:
    os.makedirs(args.out, exist_ok=True)
    scenarios = builtin_scenarios()
    payloads = [(scenario, args.step, args.out) for scenario in scenarios]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_corpus_worker, payloads))
    else:
        rows = [_corpus_worker(payload) for payload in payloads]

    with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
        fh.write(",".join(_SUMMARY_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[field]) for field in _SUMMARY_FIELDS)
                     + "\n")

    header = (f"{'scenario':<26} {'predicted':>12} {'observed':>12} "
              f"{'gap':>12} {'decay':>12} {'viol':>5} {'drift':>12} status")
    sys.stdout.write(header + "\n")
    for row in rows:
        viol = row["razumikhin_violations"]
        sys.stdout.write(
            f"{row['scenario']:<26} {_g(row['alpha_predicted'])} "
            f"{_g(row['alpha_observed'])} {_g(row['alpha_gap'])} "
            f"{_g(row['residual_decay_factor'])} "
            f"{str(viol if viol is not None else 'none'):>5} "
            f"{_g(row['conservation_drift'])} "
            f"{'pass' if row['passed'] else 'FAIL'}\n")
        if row["detail"]:
            sys.stdout.write(f"    {row['detail']}\n")
    passed = sum(1 for row in rows if row["passed"])
    sys.stdout.write(f"corpus: {passed}/{len(rows)} scenarios passed\n")
    return EXIT_OK if passed == len(rows) else EXIT_CHECK


# -- sweep --------------------------------------------------------------------------

def _cmd_sweep(args: argparse.Namespace) -> int:
    scenario = Scenario.from_file(args.file)
    system = scenario.build_system()
    window = max_bound(scenario.profiles)
    report = semistability_sweep(system, scenario.profiles,
                                 scenario.integration, args.count,
                                 args.amplitude, args.seed,
                                 window=window if window > 0.0 else None,
                                 tol=scenario.convergence_tol)
    out_dir = os.path.join(args.out, scenario.name)
    os.makedirs(out_dir, exist_ok=True)

    n = system.n
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index"] + [f"h_{i + 1}" for i in range(n)]
                        + ["converged", "alpha", "predicted",
                           "excursion_ratio", "error"])
        for run in report.runs:
            writer.writerow(
                [str(run.index)]
                + [_fmt(float(v)) for v in run.history_value]
                + [_fmt(run.converged), _fmt(run.alpha), _fmt(run.predicted),
                   _fmt(run.excursion_ratio),
                   run.error if run.error is not None else ""])

    failed = [run for run in report.runs
              if run.error is not None or not run.converged]
    lines = [
        ("name", scenario.name),
        ("count", report.count),
        ("amplitude", report.amplitude),
        ("seed", report.seed),
        ("converged_count", report.converged_count),
        ("distinct_limits", report.distinct_limits()),
        ("max_excursion_ratio", report.max_excursion_ratio),
        ("failed_runs", len(failed)),
    ]
    text = "".join(f"{key} = {_fmt(value)}\n" for key, value in lines)
    with open(os.path.join(out_dir, "summary.txt"), "w", newline="") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if not failed else EXIT_CHECK


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaylab",
        description="Integrate delayed consensus scenarios and verify the "
                    "semistability predictions against declared gates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one scenario file")
    p_run.add_argument("file", help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate",
                           help="check scenario structure without integrating")
    p_val.add_argument("file", help="scenario JSON file")
    p_val.set_defaults(func=_cmd_validate)

    p_cor = sub.add_parser("corpus", help="run the built-in scenario corpus")
    p_cor.add_argument("--out", required=True, help="output directory")
    p_cor.add_argument("--step", type=float, default=None,
                       help="override the integration step "
                            "(gates relax tenfold)")
    p_cor.add_argument("--jobs", type=int, default=1,
                       help="run scenarios in this many processes")
    p_cor.set_defaults(func=_cmd_corpus)

    p_swp = sub.add_parser("sweep",
                           help="integrate many seeded random histories")
    p_swp.add_argument("file", help="scenario JSON file")
    p_swp.add_argument("--count", type=int, required=True,
                       help="number of runs (at least 2)")
    p_swp.add_argument("--amplitude", type=float, required=True,
                       help="half-width of the random history box")
    p_swp.add_argument("--seed", type=int, required=True,
                       help="master seed; run i uses (seed, i)")
    p_swp.add_argument("--out", required=True, help="output directory")
    p_swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NonconvergentStepError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"i/o failure: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except RuntimeError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
