from __future__ import annotations

import numpy as np
import pytest

from fedbalance.engine import (Schedule, aggregate, centralized_gd, centralized_optimum,
                               local_step, run_schedule)
from fedbalance.models import LossModel, gradient, partition
from fedbalance.resources import ResourceParams


def test_schedule_validation():
    assert Schedule(4, 5).T == 20
    for bad in [(0, 1), (1, 0), (1.5, 2)]:
        with pytest.raises(ValueError):
            Schedule(*bad)


def test_aggregate_weighted():
    out = aggregate([np.array([1.0, 0.0]), np.array([0.0, 1.0])], [1, 3])
    np.testing.assert_allclose(out, [0.25, 0.75])
    with pytest.raises(ValueError):
        aggregate([], [])
    with pytest.raises(ValueError):
        aggregate([np.zeros(1)], [0])


def test_local_step(blobs, backend):
    m = LossModel("logistic")
    w = np.full(blobs.dim, 0.1)
    np.testing.assert_allclose(local_step(w, m, blobs, 0.5), w - 0.5 * gradient(m, w, blobs))


@pytest.mark.parametrize("scheme", ["iid", "label-sorted"])
def test_tau1_equals_centralized(blobs, model, scheme, backend):
    part = partition(blobs, 5, scheme, seed=2)
    traj = run_schedule(Schedule(1, 100), part, model, 0.05)
    path = centralized_gd(model, part.pooled(), 0.05, 100)
    assert np.max(np.abs(traj.global_params - path[1:])) < 1e-12


def test_single_client_any_tau_equals_centralized(blobs, model):
    part = partition(blobs, 1)
    traj = run_schedule(Schedule(7, 6), part, model, 0.05)
    path = centralized_gd(model, blobs, 0.05, 42)
    np.testing.assert_allclose(traj.global_params, path[7::7], rtol=0, atol=1e-13)


def test_trajectory_shapes_and_history(iid5):
    m = LossModel("hinge")
    traj = run_schedule(Schedule(3, 4), iid5, m, 0.1, record_clients=True)
    n = iid5.clients[0].dim
    assert traj.global_params.shape == (4, n)
    assert traj.client_history.shape == (13, 5, n)
    assert traj.pre_aggregation.shape == (4, 5, n)
    # post-aggregation rows hold the global model for every client
    for k in range(1, 5):
        np.testing.assert_array_equal(traj.client_history[3 * k], np.tile(traj.global_params[k - 1], (5, 1)))
        np.testing.assert_allclose(aggregate(traj.pre_aggregation[k - 1], iid5.sizes),
                                   traj.global_params[k - 1])
    assert np.isnan(traj.accuracies).all()
    assert traj.steps == 12 and traj.rounds == 4


def test_cost_accounting_expected(iid5):
    p = ResourceParams(t_tot=1e9, E_tot=1e9)
    traj = run_schedule(Schedule(2, 5), iid5, LossModel(), 0.1, resource_params=p)
    per_d = p.delay_coefficient * 4 + p.comm_delay
    per_e = p.train_energy * 2 + p.E_cm
    np.testing.assert_allclose(traj.cum_delay, per_d * np.arange(1, 6))
    np.testing.assert_allclose(traj.cum_energy, per_e * np.arange(1, 6))


def test_sampled_delays_nondecreasing_and_seeded(iid5):
    p = ResourceParams(t_tot=1e9, E_tot=1e9)
    runs = [run_schedule(Schedule(2, 6), iid5, LossModel(), 0.1, resource_params=p,
                         delay_mode="sampled", rng=np.random.default_rng(5)) for _ in range(2)]
    np.testing.assert_array_equal(runs[0].cum_delay, runs[1].cum_delay)
    assert np.all(np.diff(runs[0].cum_delay) > 0)
    with pytest.raises(ValueError):
        run_schedule(Schedule(1, 1), iid5, LossModel(), 0.1, resource_params=p, delay_mode="sampled")


def test_enforce_mode_truncates(iid5):
    p = ResourceParams(t_tot=1e9, E_tot=25.0, E_tr=10.0)
    traj = run_schedule(Schedule(1, 10), iid5, LossModel(), 0.1, resource_params=p,
                        budget_mode="enforce", record_clients=True)
    assert traj.truncated and traj.rounds == 2
    assert traj.cum_energy[-1] <= 25.0
    assert traj.client_history.shape[0] == 3
    off = run_schedule(Schedule(1, 10), iid5, LossModel(), 0.1, resource_params=p)
    assert off.rounds == 10 and not off.truncated


def test_engine_argument_errors(iid5):
    with pytest.raises(ValueError):
        run_schedule(Schedule(1, 1), iid5, LossModel(), 0.1, budget_mode="enforce")
    with pytest.raises(ValueError):
        run_schedule(Schedule(1, 1), iid5, LossModel(), -0.1)
    with pytest.raises(ValueError):
        run_schedule(Schedule(1, 1), iid5, LossModel(), 0.1, initial=np.zeros(2))


def test_centralized_optimum_is_stationary_for_smooth_loss(blobs):
    m = LossModel("logistic", reg=0.1)
    w = centralized_optimum(m, blobs, 0.5)
    assert np.linalg.norm(gradient(m, w, blobs)) < 1e-7
