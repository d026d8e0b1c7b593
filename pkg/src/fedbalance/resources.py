"""Straggler delay, communication delay and energy accounting.

Units: ``a`` is seconds per local step (the deterministic floor of the
shifted-exponential delay), ``mu`` is the fluctuation rate in 1/s, and
``cpu_freq`` (Hz) is the clock used only by the switched-capacitance energy
formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

EXACT_SUM_LIMIT = 60


class InfeasibleChannelError(ValueError):
    """A client has zero achievable uplink rate."""


@dataclass(frozen=True)
class ResourceParams:
    N: int = 5
    mu: float = 0.2
    a: float = 0.002
    P_cm: float = 1.5
    t_tot: float = 200.0
    E_tot: float = 1500.0
    # configured constants; when None they are derived from the channel / chip model
    t_cm: float | None = 0.14
    E_tr: float | None = 10.0
    kappa: float = 1e-28
    C: float = 1e4
    D_max: int = 1000
    cpu_freq: float = 2e9
    B: float = 1e6
    N0: float = 1e-9
    h: tuple[float, ...] = ()
    Z: float = 1e6
    heterogeneous: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        for name in ("mu", "P_cm", "t_tot", "E_tot"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a < 0:
            raise ValueError("a must be nonnegative")
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))

    @property
    def comm_delay(self) -> float:
        return comm_delay(self)

    @property
    def train_energy(self) -> float:
        return training_energy(self)

    @property
    def E_cm(self) -> float:
        return self.P_cm * self.comm_delay

    @property
    def delay_coefficient(self) -> float:
        """Expected straggler delay per local step squared: (N/mu) I0 + a."""
        return self.N / self.mu * compute_I0(self.N) + self.a

    def client_a(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Per-client delay floors: all ``a``, or uniform in [a/2, a] if heterogeneous."""
        if not self.heterogeneous:
            return np.full(self.N, self.a)
        if rng is None:
            raise ValueError("heterogeneous floors need an rng")
        return rng.uniform(0.5 * self.a, self.a, self.N)


@lru_cache(maxsize=None)
def compute_I0(N: int) -> float:
    """sum_{i=1..N} C(N-1, i-1) (-1)^(i-1) / i^2, which equals H_N / N.

    Evaluated exactly in rationals up to N=60 (the float alternating sum
    cancels catastrophically well before that), harmonic form beyond.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > EXACT_SUM_LIMIT:
        return math.fsum(1.0 / k for k in range(1, N + 1)) / N
    total = Fraction(0)
    for i in range(1, N + 1):
        total += Fraction(math.comb(N - 1, i - 1) * (-1) ** (i - 1), i * i)
    return float(total)


def expected_training_delay(tau: int, params: ResourceParams) -> float:
    """Upper bound on E[max_i t_i] for one round of ``tau`` local steps."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    return params.N * tau / params.mu * compute_I0(params.N) + params.a * tau


def sample_training_delay(tau: int, params: ResourceParams, rng: np.random.Generator,
                          size: int | None = None, a_i=None):
    """Draw the synchronous round delay max_i (a_i tau + Exp(rate mu/tau)), batch size 1."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    floors = params.client_a(rng) if a_i is None else np.asarray(a_i, dtype=np.float64)
    shape = (floors.shape[0],) if size is None else (size, floors.shape[0])
    draws = floors * tau + rng.exponential(tau / params.mu, shape)
    return float(draws.max()) if size is None else draws.max(axis=1)


def comm_delay(params: ResourceParams) -> float:
    """Upload delay of the slowest FDMA client, or the configured constant."""
    if params.t_cm is not None:
        return float(params.t_cm)
    if not params.h:
        raise ValueError("t_cm is not configured and no channel gains h are given")
    if params.B <= 0 or params.N0 <= 0:
        raise ValueError("B and N0 must be positive")
    worst = 0.0
    for i, gain in enumerate(params.h):
        rate = params.B * math.log2(1.0 + params.P_cm * gain / params.N0)
        if rate <= 0:
            raise InfeasibleChannelError(f"client {i} has zero uplink rate (h={gain})")
        worst = max(worst, params.Z / rate)
    return worst


def training_energy(params: ResourceParams) -> float:
    """Energy of one local step on the most expensive client: kappa C D_max f^2."""
    if params.E_tr is not None:
        return float(params.E_tr)
    return params.kappa * params.C * params.D_max * params.cpu_freq ** 2


class BudgetUsage(NamedTuple):
    delay: float
    energy: float
    delay_ok: bool
    energy_ok: bool

    @property
    def feasible(self) -> bool:
        return self.delay_ok and self.energy_ok


def budget_usage(tau, K, params: ResourceParams) -> BudgetUsage:
    """Expected delay and energy of K rounds of tau local steps.

    delay = E[t_tr](tau) * T + t_cm K = ((N/mu) I0 + a) K tau^2 + t_cm K
    energy = E_tr K tau + E_cm K
    """
    if tau <= 0 or K <= 0:
        raise ValueError("tau and K must be positive")
    delay = params.delay_coefficient * K * tau * tau + params.comm_delay * K
    energy = params.train_energy * K * tau + params.E_cm * K
    return BudgetUsage(delay, energy, delay <= params.t_tot, energy <= params.E_tot)


def max_rounds(tau: int, params: ResourceParams) -> int:
    """Largest integer K whose usage at this tau fits both budgets (0 if none)."""
    per_delay = params.delay_coefficient * tau * tau + params.comm_delay
    per_energy = params.train_energy * tau + params.E_cm
    K = int(min(params.t_tot / per_delay, params.E_tot / per_energy))
    # guard the floor against rounding in the division
    while K > 0 and not budget_usage(tau, K, params).feasible:
        K -= 1
    while budget_usage(tau, K + 1, params).feasible:
        K += 1
    return K
