"""Empirical estimates of the smoothness/divergence constants from probe points."""
from __future__ import annotations

import numpy as np

from .bounds import ConvergenceConstants
from .engine import Trajectory
from .models import LossModel, Partition, global_loss, gradient


def probe_points(trajectory: Trajectory, rng: np.random.Generator, n_perturb: int = 20,
                 scale: float = 0.5) -> np.ndarray:
    """Distinct points visited by a run, plus Gaussian perturbations of them.

    Includes the initial point, every global iterate and, when recorded,
    every client iterate. Perturbations have standard deviation ``scale``
    times the spread of the visited points (or ``scale`` if they coincide).
    """
    pts = [trajectory.initial[None, :], trajectory.global_params]
    if trajectory.client_history is not None:
        pts.append(trajectory.client_history.reshape(-1, trajectory.initial.shape[0]))
    visited = np.unique(np.vstack(pts), axis=0)
    spread = float(np.linalg.norm(visited.std(axis=0))) or 1.0
    anchors = visited[rng.integers(0, len(visited), n_perturb)]
    noise = rng.standard_normal(anchors.shape) * (scale * spread / np.sqrt(visited.shape[1]))
    return np.vstack([visited, anchors + noise])


def _max_ratio(values: np.ndarray, points: np.ndarray) -> float:
    """max over pairs j<k of ||v_j - v_k|| / ||p_j - p_k||, skipping coincident points."""
    v = values.reshape(len(values), -1)
    best = None
    for j in range(len(points) - 1):
        dp = np.linalg.norm(points[j + 1:] - points[j], axis=1)
        dv = np.linalg.norm(v[j + 1:] - v[j], axis=1)
        ok = dp > 0
        if ok.any():
            r = float((dv[ok] / dp[ok]).max())
            best = r if best is None else max(best, r)
    if best is None:
        raise ValueError("all probe points coincide")
    return best


def estimate_constants(model: LossModel, partition: Partition, probes, eta: float,
                       epsilon: float | None = None, w_star=None,
                       tau_max: int = 20) -> ConvergenceConstants:
    """Lower estimates of rho, beta, delta_i, delta and grad_f_star over ``probes``.

    ``epsilon`` is taken as given; otherwise, with ``w_star``, it is the
    measured gap F(last probe) - F(w_star), clipped at 0; otherwise 0.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    if probes.shape[0] == 0:
        raise ValueError("need at least one probe point")
    sizes = partition.sizes.astype(np.float64)
    losses = np.array([global_loss(partition, model, w) for w in probes])
    client_grads = np.array([[gradient(model, w, c) for c in partition.clients] for w in probes])
    global_grads = np.tensordot(client_grads, sizes, axes=(1, 0)) / sizes.sum()

    if probes.shape[0] > 1:
        rho = _max_ratio(losses, probes)
        beta = _max_ratio(global_grads, probes)
    else:
        rho = beta = 0.0
    divergence = np.linalg.norm(client_grads - global_grads[:, None, :], axis=2)
    delta_i = divergence.max(axis=0)
    delta = float(sizes @ delta_i / sizes.sum())
    grad_f_star = float(np.linalg.norm(global_grads, axis=1).max())

    if epsilon is None:
        epsilon = 0.0
        if w_star is not None:
            epsilon = max(0.0, losses[-1] - global_loss(partition, model, w_star))
    return ConvergenceConstants(
        rho=rho, eta=eta, grad_f_star=grad_f_star, delta_i=tuple(delta_i),
        delta=min(delta, float(delta_i.max())), epsilon=float(epsilon), beta=beta,
        tau_max=tau_max,
    )
