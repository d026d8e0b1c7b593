"""Convergence-bound formulas and empirical diagnostics against a trajectory.

The checks that involve estimated constants return reports; they never
raise on a violated inequality, since the estimates are lower bounds of
the true suprema.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import Trajectory
from .models import LossModel, Partition, global_gradient, gradient


class BoundNotApplicable(ArithmeticError):
    """The bound's denominator is nonpositive, so it says nothing."""


@dataclass(frozen=True)
class ConvergenceConstants:
    rho: float
    eta: float
    grad_f_star: float
    delta_i: tuple[float, ...] = ()
    delta: float = 0.0
    epsilon: float = 0.0
    beta: float = 0.0  # reported only; no bound uses it
    tau_max: int = 20

    def __post_init__(self):
        object.__setattr__(self, "delta_i", tuple(float(d) for d in self.delta_i))
        for name in ("rho", "eta", "grad_f_star", "delta", "epsilon", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if any(d < 0 for d in self.delta_i):
            raise ValueError("delta_i must be nonnegative")
        if self.delta_i and self.delta > max(self.delta_i) * (1 + 1e-12):
            raise ValueError("delta cannot exceed max(delta_i)")
        if self.tau_max < 1:
            raise ValueError("tau_max must be at least 1")

    @property
    def step_gain(self) -> float:
        """rho * eta * grad_f_star, the coefficient shared by every bound."""
        return self.rho * self.eta * self.grad_f_star


def g_i(t, delta_i: float, constants: ConvergenceConstants, tau: int):
    """Local-deviation radius (delta_i + grad_f_star) eta t - tau / rho.

    Negative for small t; g_i(0) = -tau/rho, not 0.
    """
    c = constants
    return (delta_i + c.grad_f_star) * c.eta * np.asarray(t, dtype=np.float64) - tau / c.rho


def gap_denominator(T, tau, constants: ConvergenceConstants, delta: float | None = None):
    c = constants
    d = c.delta if delta is None else delta
    return c.rho * c.eta * (d + c.grad_f_star) - tau + c.step_gain * T


def loss_gap_bound(T, tau, constants: ConvergenceConstants, delta: float | None = None) -> float:
    """epsilon^2 / (rho eta (delta + grad_f_star) - tau + rho eta grad_f_star T).

    Uses the size-weighted ``delta`` unless a per-client ``delta`` is passed.
    """
    denom = gap_denominator(T, tau, constants, delta)
    if not denom > 0:
        raise BoundNotApplicable(f"denominator {denom:.6g} is not positive (T={T}, tau={tau})")
    return constants.epsilon ** 2 / denom


def min_trainings_for_gap(eps_target: float, constants: ConvergenceConstants, tau,
                          delta: float | None = None) -> float:
    """Local-step count T at which the loss-gap bound reaches ``eps_target``."""
    c = constants
    if not eps_target > 0:
        raise ValueError("eps_target must be positive")
    if not c.step_gain > 0:
        raise ValueError("rho * eta * grad_f_star must be positive")
    d = c.delta if delta is None else delta
    return (c.epsilon ** 2 / eps_target - c.rho * c.eta * (d + c.grad_f_star) + tau) / c.step_gain


def _collinearity(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Best positive multiple m with a ~ m b, and residual ||a - m b|| / ||a||.

    The residual is the sine of the angle when m > 0, and 1 when the best
    multiple is not positive. Two zero vectors are collinear.
    """
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 and nb == 0.0:
        return 1.0, 0.0
    if na == 0.0 or nb == 0.0:
        return 0.0, 1.0
    m = float(a @ b) / (nb * nb)
    if m <= 0:
        return m, 1.0
    return m, float(np.linalg.norm(a - m * b) / na)


@dataclass
class ConditionResult:
    satisfied: bool
    residual: float
    multipliers: list[float] = field(default_factory=list)


@dataclass
class TightnessReport:
    """Positive-collinearity residuals for the four tightness conditions.

    1. first local iterate w_i(1) parallel to the final global w(T)
    2. client gradients at each global point parallel to the global gradient
    3. aggregated params parallel to each client's pre-aggregation params
    4. each global increment w(p) - w(p-1) parallel to -grad F(w(p-1)),
       with w(p) the size-weighted average of client params after step p
    """

    conditions: dict[int, ConditionResult]
    tol: float

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions.values())


def check_tightness_conditions(trajectory: Trajectory, partition: Partition, model: LossModel,
                               tol: float = 1e-9) -> TightnessReport:
    hist = trajectory.client_history
    if hist is None or trajectory.rounds == 0:
        raise ValueError("tightness checks need a run recorded with record_clients=True")
    sizes = partition.sizes.astype(np.float64)
    w_T = trajectory.final_params

    def summarize(pairs):
        ms, rs = [], []
        for a, b in pairs:
            m, r = _collinearity(a, b)
            ms.append(m)
            rs.append(r)
        worst = max(rs) if rs else 0.0
        return ConditionResult(worst < tol, worst, ms)

    results = {}
    results[1] = summarize((hist[1, i], w_T) for i in range(partition.N))
    results[2] = summarize(
        (gradient(model, w, client), global_gradient(partition, model, w))
        for w in trajectory.global_params for client in partition.clients
    )
    results[3] = summarize(
        (trajectory.global_params[k], trajectory.pre_aggregation[k, i])
        for k in range(trajectory.rounds) for i in range(partition.N)
    )
    virtual = np.tensordot(sizes, hist, axes=(0, 1)) / sizes.sum()
    results[4] = summarize(
        (virtual[p] - virtual[p - 1], -global_gradient(partition, model, virtual[p - 1]))
        for p in range(1, len(virtual))
    )
    return TightnessReport(results, tol)


@dataclass
class DeviationReport:
    """Counts of checked points and violations for the two inequalities.

    ``deviation_*``: ||w~_i(t) - w(T)|| <= g_i(t) wherever g_i(t) > 0.
    ``gradient_*``: ||grad F_i(w_i(t))|| <= delta_i + grad_f_star at every
    recorded client point.
    """

    deviation_checked: int
    deviation_violations: int
    worst_deviation_excess: float
    gradient_checked: int
    gradient_violations: int
    worst_gradient_excess: float

    @property
    def clean(self) -> bool:
        return self.deviation_violations == 0 and self.gradient_violations == 0


def verify_local_deviation_bound(trajectory: Trajectory, partition: Partition, model: LossModel,
                                 constants: ConvergenceConstants,
                                 rtol: float = 1e-12) -> DeviationReport:
    hist = trajectory.client_history
    if hist is None:
        raise ValueError("deviation checks need a run recorded with record_clients=True")
    if len(constants.delta_i) != partition.N:
        raise ValueError("constants must carry one delta_i per client")
    tau = trajectory.schedule.tau
    w_T = trajectory.final_params
    t = np.arange(hist.shape[0])
    dev_checked = dev_bad = grad_checked = grad_bad = 0
    dev_worst = grad_worst = -np.inf
    for i, client in enumerate(partition.clients):
        radius = g_i(t, constants.delta_i[i], constants, tau)
        dist = np.linalg.norm(hist[:, i] - w_T, axis=1)
        live = radius > 0
        excess = dist[live] - radius[live]
        dev_checked += int(live.sum())
        dev_bad += int((excess > rtol * radius[live]).sum())
        if excess.size:
            dev_worst = max(dev_worst, float(excess.max()))
        cap = constants.delta_i[i] + constants.grad_f_star
        for w in hist[:, i]:
            excess_g = float(np.linalg.norm(gradient(model, w, client))) - cap
            grad_checked += 1
            grad_bad += excess_g > rtol * cap
            grad_worst = max(grad_worst, excess_g)
    return DeviationReport(dev_checked, dev_bad, float(dev_worst), grad_checked, int(grad_bad),
                           float(grad_worst))
