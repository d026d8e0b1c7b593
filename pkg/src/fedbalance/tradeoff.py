"""Closed-form choice of local steps tau and rounds K under delay/energy budgets.

Problem (continuous relaxation):

    minimize   tau - g K tau                       (g = rho eta grad_f_star)
    subject to c K tau^2 + t_cm K <= t_tot         (c = (N/mu) I0 + a)
               E_tr K tau + E_cm K <= E_tot

KKT stationary points of the budget multipliers come in four patterns; the
energy-only point and the points where both budgets bind are the classic
candidates. The bounds tau >= 1 and K >= 1 add two more: tau = 1 with K at
its budget maximum, and K = 1 with tau at its budget maximum. The optimum of
the relaxation is always one of these, so selection runs over all of them
unless ``budget_cases_only`` is requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import ConvergenceConstants
from .engine import Schedule
from .resources import ResourceParams, budget_usage, max_rounds

ENERGY_BINDING = "energy-binding"
BOTH_BINDING = "both-binding"
NO_MULTIPLIERS = "no-multipliers"
DELAY_BINDING = "delay-binding"
TAU_FLOOR = "tau-floor"
K_FLOOR = "K-floor"
BUDGET_CASES = (ENERGY_BINDING, BOTH_BINDING)

# relative slack when testing a continuous candidate against a budget it binds
_BIND_RTOL = 1e-9


class InfeasibleBudgetError(ValueError):
    """No candidate schedule satisfies the budgets."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class Candidate:
    kkt_case: str
    tau: float
    K: float
    I1: float = math.nan
    feasible: bool = False
    objective: float = math.nan
    delay_residual: float = math.nan
    energy_residual: float = math.nan
    reason: str = ""


@dataclass
class TradeoffSolution:
    candidates: list[Candidate]
    eligible: list[Candidate] = field(default_factory=list)
    selected: Candidate | None = None
    rounded: Schedule | None = None
    notes: list[str] = field(default_factory=list)


def surrogate_objective(tau, K, constants: ConvergenceConstants):
    """tau - rho eta grad_f_star K tau; smaller means a smaller loss-gap bound."""
    return tau - constants.step_gain * K * tau


def _objective(tau, K, gain):
    return tau - gain * K * tau


def _residuals(tau: float, K: float, params: ResourceParams) -> tuple[float, float]:
    """Signed relative slack of each budget: usage / budget - 1 (<= 0 is feasible)."""
    use = budget_usage(tau, K, params)
    return use.delay / params.t_tot - 1.0, use.energy / params.E_tot - 1.0


def _finish(cand: Candidate, params: ResourceParams, gain: float) -> Candidate:
    if cand.reason:
        return cand
    if not (np.isfinite(cand.tau) and np.isfinite(cand.K)):
        cand.reason = "not finite"
        return cand
    if cand.tau < 1 or cand.K < 1:
        cand.reason = "tau < 1" if cand.tau < 1 else "K < 1"
        return cand
    cand.delay_residual, cand.energy_residual = _residuals(cand.tau, cand.K, params)
    cand.objective = _objective(cand.tau, cand.K, gain)
    if cand.delay_residual > _BIND_RTOL:
        cand.reason = "violates delay budget"
    elif cand.energy_residual > _BIND_RTOL:
        cand.reason = "violates energy budget"
    else:
        cand.feasible = True
    return cand


def energy_binding_candidate(params: ResourceParams, gain: float) -> Candidate:
    """Stationary point of the objective along the energy boundary (delay slack)."""
    E_cm, E_tr, E_tot = params.E_cm, params.train_energy, params.E_tot
    if gain <= 0 or E_tr <= 0:
        return Candidate(ENERGY_BINDING, math.nan, math.nan,
                         reason="needs positive step gain and training energy")
    tau = (math.sqrt(gain * E_cm * E_tot) - E_cm) / E_tr
    K = math.sqrt(E_tot / (gain * E_cm))
    return Candidate(ENERGY_BINDING, tau, K)


def both_binding_candidates(params: ResourceParams) -> list[Candidate]:
    """Both roots of c E_tot tau^2 - E_tr t_tot tau + (t_cm E_tot - E_cm t_tot) = 0.

    At a root the delay/energy usage ratio equals t_tot / E_tot, and K is
    then fixed by the energy budget.
    """
    c = params.delay_coefficient
    t_cm, E_cm, E_tr = params.comm_delay, params.E_cm, params.train_energy
    t_tot, E_tot = params.t_tot, params.E_tot
    I1 = (E_tr * t_tot) ** 2 - 4 * E_tot * c * (t_cm * E_tot - E_cm * t_tot)
    if I1 < 0:
        return [Candidate(BOTH_BINDING, math.nan, math.nan, I1=I1, reason="I1 < 0")]
    root = math.sqrt(I1)
    out = []
    for sign in (-1.0, 1.0):
        tau = (E_tr * t_tot + sign * root) / (2 * E_tot * c)
        denom = E_cm + E_tr * tau
        K = E_tot / denom if denom > 0 else math.nan
        out.append(Candidate(BOTH_BINDING, tau, K, I1=I1))
    return out


def rejected_cases(params: ResourceParams, gain: float) -> list[Candidate]:
    """The no-multiplier and delay-only patterns.

    With no active budget, stationarity in K forces tau = 0. With only the
    delay budget active, the stationary tau solves
    (t_cm + c tau^2)^2 = g t_tot (t_cm - c tau^2), so c tau^2 < t_cm and
    tau < sqrt(t_cm / c), below one step whenever c >= t_cm. The delay-only
    point is still evaluated so that the rare case c < t_cm is not lost.
    """
    none = Candidate(NO_MULTIPLIERS, 0.0, math.nan, reason="stationarity forces tau = 0")
    c, t_cm, t_tot = params.delay_coefficient, params.comm_delay, params.t_tot
    b = 2 * t_cm + gain * t_tot
    disc = b * b - 4 * (t_cm * t_cm - gain * t_tot * t_cm)
    u = (-b + math.sqrt(disc)) / 2 if disc >= 0 else -1.0
    if u <= 0:
        delay = Candidate(DELAY_BINDING, math.nan, math.nan, reason="no positive stationary tau")
    else:
        tau = math.sqrt(u / c)
        K = t_tot / (t_cm + c * tau * tau)
        delay = _finish(Candidate(DELAY_BINDING, tau, K), params, gain)
    return [none, delay]


def bound_candidates(params: ResourceParams, gain: float) -> list[Candidate]:
    """Points where tau >= 1 or K >= 1 is active, with the other variable maximal.

    The objective falls as K grows, so with tau fixed at 1 the best K is the
    largest the budgets allow; with K fixed at 1 the objective is
    tau (1 - g), minimized by the largest feasible tau when g > 1.
    """
    c, t_cm, E_cm, E_tr = params.delay_coefficient, params.comm_delay, params.E_cm, params.train_energy
    K1 = min(params.t_tot / (c + t_cm), params.E_tot / (E_tr + E_cm))
    tau_cap = math.sqrt(max(params.t_tot - t_cm, 0.0) / c) if c > 0 else math.inf
    if E_tr > 0:
        tau_cap = min(tau_cap, (params.E_tot - E_cm) / E_tr)
    return [
        _finish(Candidate(TAU_FLOOR, 1.0, K1), params, gain),
        _finish(Candidate(K_FLOOR, tau_cap, 1.0), params, gain),
    ]


def _nearest_feasible(params: ResourceParams, gain: float, tau_limit: int) -> dict:
    """Best integer schedule by scanning tau with K at its budget maximum."""
    best = None
    for tau in range(1, tau_limit + 1):
        K = max_rounds(tau, params)
        if K < 1:
            break
        obj = _objective(tau, K, gain)
        if best is None or obj < best[2]:
            best = (tau, K, obj)
    if best is None:
        return {"integer_fallback": None}
    return {"integer_fallback": {"tau": best[0], "K": best[1], "objective": best[2]}}


def solve_closed_form(params: ResourceParams, constants: ConvergenceConstants,
                      budget_cases_only: bool = False) -> TradeoffSolution:
    """Evaluate every KKT candidate, filter by tau, K >= 1 and both budgets, pick the best.

    With ``budget_cases_only`` only the energy-binding and both-binding
    candidates may be selected (the bound-active and delay-only rows are
    still listed). Raises InfeasibleBudgetError, carrying the candidate
    table and an integer fallback in ``diagnostics``, when nothing survives.
    """
    gain = constants.step_gain
    cands = [energy_binding_candidate(params, gain), *both_binding_candidates(params)]
    cands = [_finish(c, params, gain) for c in cands]
    cands.extend(rejected_cases(params, gain))
    cands.extend(bound_candidates(params, gain))
    usable = [c for c in cands if c.feasible and (not budget_cases_only or c.kkt_case in BUDGET_CASES)]
    solution = TradeoffSolution(cands, usable)
    if not usable:
        diag = {"candidates": cands}
        diag.update(_nearest_feasible(params, gain, max(constants.tau_max, 1)))
        raise InfeasibleBudgetError("no closed-form candidate satisfies tau, K >= 1 and both budgets",
                                    diag)
    solution.selected = min(usable, key=lambda c: (c.objective, c.tau))
    return solution


def grid_oracle(params: ResourceParams, constants: ConvergenceConstants, tau_range, K_range):
    """Exhaustive integer minimizer of the surrogate objective under both budgets.

    Ties go to the smaller tau, then the smaller K. Returns (tau, K, objective).
    """
    taus = np.asarray(list(tau_range), dtype=np.float64)
    Ks = np.asarray(list(K_range), dtype=np.float64)
    if taus.size == 0 or Ks.size == 0:
        raise ValueError("tau_range and K_range must be nonempty")
    t, k = np.meshgrid(taus, Ks, indexing="ij")
    delay = params.delay_coefficient * k * t * t + params.comm_delay * k
    energy = params.train_energy * k * t + params.E_cm * k
    ok = (delay <= params.t_tot) & (energy <= params.E_tot)
    if not ok.any():
        raise InfeasibleBudgetError("no integer (tau, K) in range fits the budgets")
    obj = np.where(ok, _objective(t, k, constants.step_gain), np.inf)
    flat = np.flatnonzero(obj == obj.min())
    i, j = np.unravel_index(flat[0], obj.shape)
    return int(taus[i]), int(Ks[j]), float(obj[i, j])


def round_and_clamp(solution: TradeoffSolution, params: ResourceParams,
                    constants: ConvergenceConstants, tau_max: int | None = None,
                    K_cap: int | None = None) -> Schedule:
    """Integer schedule from the continuous solution.

    For the floor and ceiling of each eligible candidate's tau (the selected
    one first), tau is clamped into [1, tau_max] and K set to the largest
    integer the budgets allow there (at most ``K_cap``); the schedule with
    the best objective wins, ties going to the earlier-listed one. Since the
    objective falls with K, this dominates rounding K separately.
    """
    if solution.selected is None:
        raise ValueError("solution has no selected candidate")
    tau_max = constants.tau_max if tau_max is None else tau_max
    gain = constants.step_gain
    sources = [solution.selected] + [c for c in solution.eligible if c is not solution.selected]
    taus = []
    for cand in sources:
        for t in (math.floor(cand.tau), math.ceil(cand.tau)):
            t = min(max(t, 1), tau_max)
            if t not in taus:
                taus.append(t)
    best = None
    for tau in taus:
        K = max_rounds(tau, params)
        if K_cap is not None:
            K = min(K, K_cap)
        if K < 1:
            continue
        obj = _objective(tau, K, gain)
        if best is None or obj < best[0]:
            best = (obj, tau, K)
    if best is None:
        raise InfeasibleBudgetError("no integer schedule near the continuous solution fits the budgets",
                                    {"selected": solution.selected})
    schedule = Schedule(best[1], best[2])
    solution.rounded = schedule
    return schedule
