"""Federated averaging loop with periodic aggregation and budget accounting."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .models import ClientDataset, LossModel, Partition, accuracy, global_loss
from .resources import ResourceParams, expected_training_delay, sample_training_delay

log = logging.getLogger(__name__)

BUDGET_MODES = ("off", "enforce")
DELAY_MODES = ("expected", "sampled")


@dataclass(frozen=True)
class Schedule:
    tau: int
    K: int

    def __post_init__(self):
        if int(self.tau) != self.tau or int(self.K) != self.K:
            raise ValueError("tau and K must be integers")
        if self.tau < 1 or self.K < 1:
            raise ValueError(f"tau and K must be positive, got tau={self.tau}, K={self.K}")
        object.__setattr__(self, "tau", int(self.tau))
        object.__setattr__(self, "K", int(self.K))

    @property
    def T(self) -> int:
        return self.K * self.tau


@dataclass
class Trajectory:
    """Per-aggregation history of one run.

    ``client_history[t, i]`` holds client i's params after local step t
    (post-aggregation when t is a multiple of tau); row 0 is the initial
    point. ``pre_aggregation[k, i]`` is client i's params just before the
    (k+1)-th aggregation. Both are only kept with ``record_clients=True``.
    """

    schedule: Schedule
    initial: np.ndarray
    initial_loss: float
    global_params: np.ndarray
    losses: np.ndarray
    accuracies: np.ndarray
    cum_delay: np.ndarray
    cum_energy: np.ndarray
    truncated: bool = False
    client_history: np.ndarray | None = None
    pre_aggregation: np.ndarray | None = None

    @property
    def rounds(self) -> int:
        return len(self.losses)

    @property
    def steps(self) -> int:
        return self.rounds * self.schedule.tau

    @property
    def final_params(self) -> np.ndarray:
        return self.global_params[-1] if self.rounds else self.initial

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1]) if self.rounds else self.initial_loss


def local_step(params, model: LossModel, data: ClientDataset, eta: float) -> np.ndarray:
    """One gradient-descent step ``w - eta * grad F_i(w)``."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    w = np.ascontiguousarray(params, dtype=np.float64)
    if w.shape != (data.dim,):
        raise ValueError(f"params of shape {w.shape} do not match feature dimension {data.dim}")
    return kernels.local_steps(data.features, data.labels, w, eta, 1, model.code, model.reg)


def aggregate(client_params: Sequence, sizes: Sequence) -> np.ndarray:
    """Size-weighted average sum_i D_i w_i / D, accumulated in client order."""
    if len(client_params) == 0:
        raise ValueError("nothing to aggregate")
    if len(client_params) != len(sizes):
        raise ValueError("one size per client is required")
    total = np.zeros_like(np.asarray(client_params[0], dtype=np.float64))
    weight = 0
    for w, D in zip(client_params, sizes):
        if D <= 0:
            raise ValueError("client sizes must be positive")
        w = np.asarray(w, dtype=np.float64)
        if w.shape != total.shape:
            raise ValueError("client params differ in dimension")
        total += D * w
        weight += D
    return total / weight


class _Meter:
    """Cumulative delay/energy charged per round."""

    def __init__(self, params: ResourceParams | None, tau: int, delay_mode: str, rng):
        self.params = params
        self.tau = tau
        self.delay_mode = delay_mode
        self.rng = rng
        self.delay = 0.0
        self.energy = 0.0
        if params is not None:
            self.a_i = params.client_a(rng) if params.heterogeneous else None
            self.expected = expected_training_delay(tau, params)
            self.t_cm = params.comm_delay
            self.E_tr = params.train_energy
            self.E_cm = params.E_cm

    def next_round(self) -> tuple[float, float]:
        """Cost of one round: t_tr * tau + t_cm seconds, E_tr * tau + E_cm joules."""
        if self.params is None:
            return 0.0, 0.0
        if self.delay_mode == "sampled":
            t_tr = sample_training_delay(self.tau, self.params, self.rng, a_i=self.a_i)
        else:
            t_tr = self.expected
        return t_tr * self.tau + self.t_cm, self.E_tr * self.tau + self.E_cm


def run_schedule(schedule: Schedule, partition: Partition, model: LossModel, eta: float,
                 initial=None, resource_params: ResourceParams | None = None,
                 budget_mode: str = "off", delay_mode: str = "expected",
                 rng: np.random.Generator | None = None, test: ClientDataset | None = None,
                 record_clients: bool = False) -> Trajectory:
    """Run T = K tau local steps on every client, aggregating after each tau-th step.

    In ``enforce`` mode a round is executed only if its full cost fits in
    what is left of both budgets; otherwise the run stops there and the
    trajectory is marked truncated.
    """
    if budget_mode not in BUDGET_MODES:
        raise ValueError(f"budget_mode must be one of {BUDGET_MODES}")
    if delay_mode not in DELAY_MODES:
        raise ValueError(f"delay_mode must be one of {DELAY_MODES}")
    if budget_mode == "enforce" and resource_params is None:
        raise ValueError("enforce mode needs resource params")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if delay_mode == "sampled" and rng is None:
        raise ValueError("sampled delays need an rng")

    dim = partition.clients[0].dim
    w0 = np.zeros(dim) if initial is None else np.array(initial, dtype=np.float64)
    if w0.shape != (dim,):
        raise ValueError(f"initial params of shape {w0.shape} do not match dimension {dim}")

    tau, K = schedule.tau, schedule.K
    N = partition.N
    meter = _Meter(resource_params, tau, delay_mode, rng)

    g_hist, losses, accs, delays, energies = [], [], [], [], []
    client_hist = pre_agg = None
    if record_clients:
        client_hist = np.empty((schedule.T + 1, N, dim))
        client_hist[0] = w0
        pre_agg = np.empty((K, N, dim))

    w = w0
    truncated = False
    for k in range(K):
        d_cost, e_cost = meter.next_round()
        if budget_mode == "enforce":
            p = resource_params
            if meter.delay + d_cost > p.t_tot or meter.energy + e_cost > p.E_tot:
                truncated = True
                log.info("budget exhausted after %d of %d rounds", k, K)
                break
        locals_ = []
        for i, client in enumerate(partition.clients):
            hist = client_hist[k * tau + 1:(k + 1) * tau + 1, i] if record_clients else None
            if hist is not None:
                buf = np.empty((tau, dim))
                wi = kernels.local_steps(client.features, client.labels, w, eta, tau,
                                         model.code, model.reg, buf)
                hist[:] = buf
            else:
                wi = kernels.local_steps(client.features, client.labels, w, eta, tau,
                                         model.code, model.reg)
            locals_.append(wi)
        w = aggregate(locals_, partition.sizes)
        if record_clients:
            pre_agg[k] = locals_
            client_hist[(k + 1) * tau] = w
        meter.delay += d_cost
        meter.energy += e_cost
        g_hist.append(w)
        losses.append(global_loss(partition, model, w))
        accs.append(accuracy(w, test) if test is not None else float("nan"))
        delays.append(meter.delay)
        energies.append(meter.energy)

    done = len(losses)
    if record_clients and truncated:
        client_hist = client_hist[:done * tau + 1]
        pre_agg = pre_agg[:done]
    return Trajectory(
        schedule=schedule,
        initial=w0,
        initial_loss=global_loss(partition, model, w0),
        global_params=np.array(g_hist).reshape(done, dim),
        losses=np.array(losses),
        accuracies=np.array(accs),
        cum_delay=np.array(delays),
        cum_energy=np.array(energies),
        truncated=truncated,
        client_history=client_hist,
        pre_aggregation=pre_agg,
    )


def centralized_gd(model: LossModel, data: ClientDataset, eta: float, steps: int,
                   initial=None) -> np.ndarray:
    """Plain full-batch gradient descent on one dataset; returns (steps+1, n) iterates."""
    w = np.zeros(data.dim) if initial is None else np.array(initial, dtype=np.float64)
    path = np.empty((steps + 1, data.dim))
    path[0] = w
    kernels.local_steps(data.features, data.labels, w, eta, steps, model.code, model.reg, path[1:])
    return path


def centralized_optimum(model: LossModel, data: ClientDataset, eta: float, tol: float = 1e-8,
                        max_steps: int = 200_000, initial=None) -> np.ndarray:
    """Gradient descent on pooled data until ||grad|| < tol (or max_steps).

    Returns the lowest-loss iterate seen, which matters for the nonsmooth
    hinge loss where the gradient norm need not vanish.
    """
    w = np.zeros(data.dim) if initial is None else np.array(initial, dtype=np.float64)
    best_w, best_f = w, np.inf
    chunk = 500
    done = 0
    while done < max_steps:
        f, g = kernels.loss_grad(data.features, data.labels, w, model.code, model.reg)
        if f < best_f:
            best_w, best_f = w, f
        if np.linalg.norm(g) < tol:
            return w
        w = kernels.local_steps(data.features, data.labels, w, eta, chunk, model.code, model.reg)
        done += chunk
    f, _ = kernels.loss_grad(data.features, data.labels, w, model.code, model.reg)
    return w if f < best_f else best_w
