"""Experiment orchestration: data setup, sweeps, comparisons, bound reports, CSV."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as datasets
from .bounds import (BoundNotApplicable, ConvergenceConstants, check_tightness_conditions,
                     g_i, loss_gap_bound, min_trainings_for_gap, verify_local_deviation_bound)
from .config import ExperimentConfig
from .engine import Schedule, Trajectory, centralized_gd, centralized_optimum, run_schedule
from .estimate import estimate_constants, probe_points
from .models import ClientDataset, LossModel, Partition, global_loss, partition
from .resources import ResourceParams, max_rounds
from .tradeoff import InfeasibleBudgetError, TradeoffSolution, round_and_clamp, solve_closed_form

log = logging.getLogger(__name__)

METRICS_HEADER = ("round", "tau", "K", "loss", "accuracy", "cum_delay_s", "cum_energy_J", "seed")
PROBE_STEPS = 200


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    tau: int
    K: int
    loss: float
    accuracy: float
    cum_delay_s: float
    cum_energy_J: float
    seed: int


@dataclass
class Setup:
    config: ExperimentConfig
    model: LossModel
    partition: Partition
    test: ClientDataset
    resources: ResourceParams
    initial: np.ndarray


def build_setup(config: ExperimentConfig) -> Setup:
    """Load or generate data, split off the test set and partition the rest."""
    if config.dataset == "synthetic":
        full = datasets.make_blobs(config.n_samples, config.dim, config.separation, config.seed)
    else:
        full = datasets.load_idx_parity(config.idx_images, config.idx_labels,
                                        config.subset, config.seed)
    train, test = datasets.train_test_split(full, config.test_fraction, config.seed)
    part = partition(train, config.N, config.scheme, config.seed)
    if config.init == "gaussian":
        initial = np.random.default_rng(config.seed).standard_normal(train.dim) * 0.01
    else:
        initial = np.zeros(train.dim)
    return Setup(config, LossModel(config.model, config.reg), part, test,
                 config.resources(), initial)


def to_records(traj: Trajectory, seed: int) -> list[MetricsRecord]:
    s = traj.schedule
    return [MetricsRecord(k + 1, s.tau, s.K, float(traj.losses[k]), float(traj.accuracies[k]),
                          float(traj.cum_delay[k]), float(traj.cum_energy[k]), seed)
            for k in range(traj.rounds)]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def format_metrics(records) -> str:
    """CSV text for ``records``: header first, floats to 9 significant digits."""
    lines = [",".join(METRICS_HEADER)]
    lines.extend(",".join(_fmt(getattr(r, k)) for k in METRICS_HEADER) for r in records)
    return "\n".join(lines) + "\n"


def emit_metrics(records, path) -> Path:
    path = Path(path)
    try:
        path.write_text(format_metrics(records), newline="")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def simulate(setup: Setup, schedule: Schedule, seed: int, enforce: bool | None = None,
             record_clients: bool = False) -> Trajectory:
    cfg = setup.config
    enforce = cfg.enforce_budget if enforce is None else enforce
    return run_schedule(schedule, setup.partition, setup.model, cfg.eta, setup.initial,
                        setup.resources, "enforce" if enforce else "off", cfg.delay_mode,
                        np.random.default_rng(seed), setup.test, record_clients)


def estimated_constants(setup: Setup, epsilon: float | None = None) -> ConvergenceConstants:
    """Estimate constants from a centralized-GD probe run plus 20 perturbations."""
    cfg = setup.config
    pooled = setup.partition.pooled()
    path = centralized_gd(setup.model, pooled, cfg.eta, PROBE_STEPS, setup.initial)
    rng = np.random.default_rng(cfg.seed)
    probe_traj = Trajectory(Schedule(1, PROBE_STEPS), path[0], math.nan, path[1:], path[1:, 0],
                            path[1:, 0], path[1:, 0], path[1:, 0])
    probes = probe_points(probe_traj, rng)
    return estimate_constants(setup.model, setup.partition, probes, cfg.eta,
                              epsilon=epsilon, tau_max=cfg.tau_max)


def resolve_constants(setup: Setup) -> ConvergenceConstants:
    cfg = setup.config
    if None in (cfg.rho, cfg.grad_f_star, cfg.epsilon):
        est = estimated_constants(setup, epsilon=cfg.epsilon if cfg.epsilon is not None else 0.0)
        return cfg.constants(rho=est.rho, grad_f_star=est.grad_f_star, epsilon=est.epsilon,
                             delta_i=est.delta_i, delta=est.delta, beta=est.beta)
    return cfg.constants()


def solve(config: ExperimentConfig) -> tuple[TradeoffSolution | None, InfeasibleBudgetError | None,
                                             ConvergenceConstants]:
    """Closed-form candidates for the configured budgets (no training needed unless
    some constant is ``auto``)."""
    if None in (config.rho, config.grad_f_star, config.epsilon):
        constants = resolve_constants(build_setup(config))
    else:
        constants = config.constants()
    params = config.resources()
    try:
        solution = solve_closed_form(params, constants)
    except InfeasibleBudgetError as exc:
        return None, exc, constants
    round_and_clamp(solution, params, constants)
    return solution, None, constants


def configured_schedule(setup: Setup) -> Schedule:
    """The config's (tau, K); K defaults to the budget maximum for that tau,
    and with no tau the optimized schedule is used."""
    cfg = setup.config
    if cfg.tau is None:
        constants = resolve_constants(setup)
        solution = solve_closed_form(setup.resources, constants)
        return round_and_clamp(solution, setup.resources, constants)
    K = cfg.K if cfg.K is not None else max_rounds(cfg.tau, setup.resources)
    if K < 1:
        raise InfeasibleBudgetError(f"no round fits the budgets at tau={cfg.tau}")
    return Schedule(cfg.tau, K)


@dataclass
class SweepPoint:
    tau: int
    K: int
    seed: int
    feasible: bool
    final_loss: float = math.nan
    final_accuracy: float = math.nan
    trajectory: Trajectory | None = None


@dataclass
class SweepReport:
    points: list[SweepPoint]

    @property
    def records(self) -> list[MetricsRecord]:
        out = []
        for p in self.points:
            if p.trajectory is not None:
                out.extend(to_records(p.trajectory, p.seed))
        return out

    def best(self) -> SweepPoint:
        return min((p for p in self.points if p.feasible), key=lambda p: (p.final_loss, p.tau))


def run_sweep(config: ExperimentConfig, tau_values=None, setup: Setup | None = None) -> SweepReport:
    """One run per tau with K at its budget maximum; infeasible tau are reported, not raised."""
    setup = setup or build_setup(config)
    tau_values = config.tau_values if tau_values is None else tau_values
    points = []
    for idx, tau in enumerate(tau_values):
        seed = config.seed + idx
        K = max_rounds(tau, setup.resources)
        if K < 1:
            log.info("tau=%d does not fit the budgets", tau)
            points.append(SweepPoint(tau, 0, seed, False))
            continue
        traj = simulate(setup, Schedule(tau, K), seed)
        points.append(SweepPoint(tau, K, seed, True, traj.final_loss,
                                 float(traj.accuracies[-1]) if traj.rounds else math.nan, traj))
    return SweepReport(points)


@dataclass
class CompareRun:
    label: str
    schedule: Schedule
    seed: int
    trajectory: Trajectory

    @property
    def records(self) -> list[MetricsRecord]:
        return to_records(self.trajectory, self.seed)


@dataclass
class CompareReport:
    runs: list[CompareRun]
    solution: TradeoffSolution
    constants: ConvergenceConstants

    def run(self, label: str) -> CompareRun:
        return next(r for r in self.runs if r.label == label)

    @property
    def baselines(self) -> list[CompareRun]:
        return [r for r in self.runs if r.label != "optimized"]


def run_compare(config: ExperimentConfig, setup: Setup | None = None) -> CompareReport:
    """Optimized schedule against fixed-tau baselines (tau = 1 and tau = tau_max),
    all with K at the budget maximum and the budgets enforced."""
    setup = setup or build_setup(config)
    constants = resolve_constants(setup)
    solution = solve_closed_form(setup.resources, constants)
    optimized = round_and_clamp(solution, setup.resources, constants)
    plan = [("optimized", optimized)]
    for tau in sorted({1, config.tau_max}):
        K = max_rounds(tau, setup.resources)
        if K >= 1:
            plan.append((f"tau{tau}", Schedule(tau, K)))
    runs = []
    for idx, (label, schedule) in enumerate(plan):
        seed = config.seed + idx
        runs.append(CompareRun(label, schedule, seed, simulate(setup, schedule, seed, enforce=True)))
    return CompareReport(runs, solution, constants)


@dataclass
class BoundsReport:
    values: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str]]:
        return [(k, _fmt(v)) for k, v in self.values.items()]


def bounds_report(config: ExperimentConfig, setup: Setup | None = None) -> BoundsReport:
    """Estimate constants on a recorded run and compare bounds with measured gaps."""
    setup = setup or build_setup(config)
    schedule = configured_schedule(setup)
    traj = simulate(setup, schedule, config.seed, record_clients=True)
    pooled = setup.partition.pooled()
    w_star = centralized_optimum(setup.model, pooled, config.eta)
    f_star = global_loss(setup.partition, setup.model, w_star)
    probes = probe_points(traj, np.random.default_rng(config.seed))
    est = estimate_constants(setup.model, setup.partition, probes, config.eta,
                             epsilon=config.epsilon, w_star=w_star, tau_max=config.tau_max)
    if config.epsilon is None:
        est = ConvergenceConstants(**{**est.__dict__,
                                      "epsilon": max(0.0, traj.final_loss - f_star)})
    T, tau = traj.steps, schedule.tau
    v = {
        "tau": tau, "K": schedule.K, "T": T, "rounds_completed": traj.rounds,
        "rho": est.rho, "beta": est.beta, "eta": est.eta, "delta": est.delta,
        "grad_f_star": est.grad_f_star, "epsilon": est.epsilon,
    }
    for i, d in enumerate(est.delta_i):
        v[f"delta_{i + 1}"] = d
    v["final_loss"] = traj.final_loss
    v["optimal_loss"] = f_star
    v["measured_gap"] = traj.final_loss - f_star
    try:
        v["loss_gap_bound"] = loss_gap_bound(T, tau, est)
        v["bound_applicable"] = True
    except BoundNotApplicable:
        v["loss_gap_bound"] = math.nan
        v["bound_applicable"] = False
    if est.step_gain > 0 and est.epsilon > 0:
        v["min_trainings_for_half_gap"] = min_trainings_for_gap(est.epsilon / 2, est, tau)
    v["g_1_min"] = float(min(g_i(1, d, est, tau) for d in est.delta_i))
    tight = check_tightness_conditions(traj, setup.partition, setup.model)
    for k, res in tight.conditions.items():
        v[f"tightness_{k}_residual"] = res.residual
        v[f"tightness_{k}_satisfied"] = res.satisfied
    dev = verify_local_deviation_bound(traj, setup.partition, setup.model, est)
    v["deviation_checked"] = dev.deviation_checked
    v["deviation_violations"] = dev.deviation_violations
    v["gradient_bound_checked"] = dev.gradient_checked
    v["gradient_bound_violations"] = dev.gradient_violations
    return BoundsReport(v)
