"""Federated averaging with a closed-form choice of local steps under delay/energy budgets."""
from __future__ import annotations

from .bounds import (BoundNotApplicable, ConvergenceConstants, check_tightness_conditions,
                     loss_gap_bound, min_trainings_for_gap, verify_local_deviation_bound)
from .config import ExperimentConfig, dump_config, load_config, parse_config
from .engine import Schedule, Trajectory, aggregate, centralized_gd, local_step, run_schedule
from .estimate import estimate_constants, probe_points
from .kernels import BACKEND
from .models import (ClientDataset, LossModel, Partition, accuracy, gradient, loss, partition,
                     predict)
from .resources import (InfeasibleChannelError, ResourceParams, budget_usage, comm_delay,
                        compute_I0, expected_training_delay, max_rounds, sample_training_delay,
                        training_energy)
from .tradeoff import (InfeasibleBudgetError, TradeoffSolution, grid_oracle, round_and_clamp,
                       solve_closed_form, surrogate_objective)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundNotApplicable", "ClientDataset", "ConvergenceConstants", "ExperimentConfig",
    "InfeasibleBudgetError", "InfeasibleChannelError", "LossModel", "Partition", "ResourceParams",
    "Schedule", "TradeoffSolution", "Trajectory", "accuracy", "aggregate", "budget_usage",
    "centralized_gd", "check_tightness_conditions", "comm_delay", "compute_I0", "dump_config",
    "estimate_constants", "expected_training_delay", "gradient", "grid_oracle", "load_config",
    "local_step", "loss", "loss_gap_bound", "max_rounds", "min_trainings_for_gap",
    "parse_config", "partition", "predict", "probe_points", "round_and_clamp", "run_schedule",
    "sample_training_delay", "solve_closed_form", "surrogate_objective", "training_energy",
    "verify_local_deviation_bound",
]
