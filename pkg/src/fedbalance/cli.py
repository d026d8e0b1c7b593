"""Command-line entry point: ``fedbalance {solve,simulate,sweep,bounds,compare}``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from . import harness
from .config import ExperimentConfig, load_config
from .tradeoff import BUDGET_CASES, Candidate, InfeasibleBudgetError

log = logging.getLogger("fedbalance")

TABLE_COLUMNS = ("case", "tau", "K", "I1", "feasible", "objective", "delay_res", "energy_res", "reason")


def _g(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return "-" if math.isnan(x) else f"{x:.9g}"
    return str(x) if x != "" else "-"


def _candidate_row(c: Candidate) -> list[str]:
    return [c.kkt_case, _g(c.tau), _g(c.K), _g(c.I1), _g(c.feasible), _g(c.objective),
            _g(c.delay_residual), _g(c.energy_residual), c.reason or "-"]


def format_table(rows: list[list[str]], header=TABLE_COLUMNS) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def _write_rows(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _emit(records, out: Path | None) -> None:
    if out is not None:
        harness.emit_metrics(records, out)
    else:
        sys.stdout.write(harness.format_metrics(records))


def cmd_solve(config: ExperimentConfig, out: Path | None) -> int:
    solution, error, constants = harness.solve(config)
    cands = solution.candidates if solution is not None else error.diagnostics["candidates"]
    rows = [_candidate_row(c) for c in cands]
    print(f"c = {config.resources().delay_coefficient:.9g}  "
          f"g = rho*eta*grad_f_star = {constants.step_gain:.9g}")
    print(format_table(rows))
    notes = []
    if error is not None:
        fb = error.diagnostics.get("integer_fallback")
        notes.append(f"no closed-form candidate is feasible: {error}")
        if fb:
            notes.append(f"nearest feasible integer schedule: tau={fb['tau']} K={fb['K']} "
                         f"objective={fb['objective']:.9g}")
        status = 2
    else:
        sel = solution.selected
        print(f"selected: {sel.kkt_case} tau={sel.tau:.9g} K={sel.K:.9g} objective={sel.objective:.9g}")
        s = solution.rounded
        print(f"schedule: tau={s.tau} K={s.K} T={s.T}")
        if not any(c.feasible for c in cands if c.kkt_case in BUDGET_CASES):
            notes.append("neither the energy-binding nor the both-binding candidate is feasible "
                         "for these budgets; the schedule comes from a bound-active case")
        status = 0
    notes.extend(solution.notes if solution is not None else [])
    for n in notes:
        print(f"note: {n}")
    if out is not None:
        _write_rows(out, TABLE_COLUMNS, rows)
    return status


def cmd_simulate(config: ExperimentConfig, out: Path | None) -> int:
    setup = harness.build_setup(config)
    schedule = harness.configured_schedule(setup)
    traj = harness.simulate(setup, schedule, config.seed)
    _emit(harness.to_records(traj, config.seed), out)
    if traj.truncated:
        log.warning("run stopped after %d of %d rounds: budget exhausted", traj.rounds, schedule.K)
    return 0


def cmd_sweep(config: ExperimentConfig, out: Path | None) -> int:
    report = harness.run_sweep(config)
    for p in report.points:
        if p.feasible:
            log.info("tau=%d K=%d final_loss=%.9g accuracy=%.9g", p.tau, p.K, p.final_loss,
                     p.final_accuracy)
        else:
            log.warning("tau=%d infeasible under the budgets", p.tau)
    _emit(report.records, out)
    return 0


def cmd_bounds(config: ExperimentConfig, out: Path | None) -> int:
    report = harness.bounds_report(config)
    rows = report.rows()
    if out is not None:
        _write_rows(out, ("key", "value"), rows)
    else:
        sys.stdout.write("".join(f"{k},{v}\n" for k, v in [("key", "value"), *rows]))
    return 0


def cmd_compare(config: ExperimentConfig, out: Path | None) -> int:
    report = harness.run_compare(config)
    rows = []
    for run in report.runs:
        t = run.trajectory
        rows.append([run.label, str(run.schedule.tau), str(run.schedule.K), str(t.rounds),
                     _g(t.final_loss), _g(float(t.accuracies[-1]) if t.rounds else math.nan),
                     _g(float(t.cum_delay[-1]) if t.rounds else 0.0),
                     _g(float(t.cum_energy[-1]) if t.rounds else 0.0)])
        if out is not None:
            path = out.with_name(f"{out.stem}.{run.label}{out.suffix or '.csv'}")
            harness.emit_metrics(run.records, path)
    print(format_table(rows, ("run", "tau", "K", "rounds", "final_loss", "accuracy",
                              "delay_s", "energy_J")))
    return 0


COMMANDS = {
    "solve": (cmd_solve, "closed-form candidate table and integer schedule"),
    "simulate": (cmd_simulate, "run one schedule and write per-round metrics"),
    "sweep": (cmd_sweep, "run every tau in tau_values with K at its budget maximum"),
    "bounds": (cmd_bounds, "estimate constants and report convergence bounds"),
    "compare": (cmd_compare, "optimized schedule against fixed-tau baselines"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="output CSV path (stdout if omitted)")
    common.add_argument("--enforce-budget", action="store_true",
                        help="stop a run once the next round would exceed a budget")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="fedbalance", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sub.add_parser(name, help=helptext, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    overrides = {"mode": args.command}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.enforce_budget:
        overrides["enforce_budget"] = True
    try:
        if args.config is not None:
            config = load_config(args.config, **overrides)
        else:
            config = ExperimentConfig(**overrides)
        return COMMANDS[args.command][0](config, args.out)
    except InfeasibleBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
