from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedbalance.resources import (InfeasibleChannelError, ResourceParams, budget_usage,
                                  comm_delay, compute_I0, expected_training_delay, max_rounds,
                                  sample_training_delay, training_energy)


def harmonic_over_n(N):
    return float(sum(Fraction(1, k) for k in range(1, N + 1)) / N)


@pytest.mark.parametrize("N,expected", [(1, 1.0), (2, 0.75), (5, 137 / 300)])
def test_I0_values(N, expected):
    assert compute_I0(N) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("N", [1, 7, 30, 60, 61, 200])
def test_I0_matches_harmonic_form(N):
    assert compute_I0(N) == pytest.approx(harmonic_over_n(N), abs=1e-12)


def test_I0_rejects_zero():
    with pytest.raises(ValueError):
        compute_I0(0)


def test_I0_two_clients_monte_carlo():
    rng = np.random.default_rng(0)
    draws = rng.exponential(1.0, (200_000, 2)).max(axis=1)
    se = draws.std() / math.sqrt(draws.size)
    # E[max of N unit exponentials] = N * I0(N)
    assert abs(draws.mean() - 2 * compute_I0(2)) < 3 * se


def test_expected_delay_examples():
    assert expected_training_delay(1, ResourceParams(N=1, mu=1.0, a=0.0)) == pytest.approx(1.0)
    p = ResourceParams(N=5, mu=0.2, a=2.0)
    assert expected_training_delay(10, p) == pytest.approx(250 * 137 / 300 + 20, rel=1e-14)
    assert expected_training_delay(20, p) == pytest.approx(2 * expected_training_delay(10, p))


def test_sampled_delay_single_client_mean():
    p = ResourceParams(N=1, mu=0.2, a=2.0)
    draws = sample_training_delay(10, p, np.random.default_rng(1), size=100_000)
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - 70.0) < 3 * se


def test_sampled_delay_floor_and_determinism():
    p = ResourceParams(N=4, mu=1.0, a=0.5, heterogeneous=True)
    rng = np.random.default_rng(3)
    a_i = p.client_a(rng)
    assert np.all((a_i >= 0.25) & (a_i <= 0.5))
    d = sample_training_delay(6, p, np.random.default_rng(4), size=1000, a_i=a_i)
    assert np.all(d >= a_i.min() * 6)
    d2 = sample_training_delay(6, p, np.random.default_rng(4), size=1000, a_i=a_i)
    np.testing.assert_array_equal(d, d2)


def test_comm_delay_fdma_and_constant():
    p = ResourceParams(t_cm=None, Z=1e6, B=1e6, P_cm=1.5, N0=1e-9, h=(2e-9,))
    assert comm_delay(p) == pytest.approx(0.5)
    assert comm_delay(ResourceParams(t_cm=0.14)) == 0.14
    p2 = ResourceParams(t_cm=None, Z=2e6, B=1e6, P_cm=1.5, N0=1e-9, h=(2e-9,))
    assert comm_delay(p2) == pytest.approx(2 * comm_delay(p))
    slow = ResourceParams(t_cm=None, Z=1e6, B=1e6, P_cm=1.5, N0=1e-9, h=(2e-9, 2e-9 / 3))
    assert comm_delay(slow) == pytest.approx(1.0)


def test_comm_delay_zero_gain():
    with pytest.raises(InfeasibleChannelError):
        comm_delay(ResourceParams(t_cm=None, h=(1e-9, 0.0)))


def test_training_energy():
    p = ResourceParams(E_tr=None, kappa=1e-28, C=1e4, D_max=1000, cpu_freq=2e9)
    assert training_energy(p) == pytest.approx(4e-3, rel=1e-12)
    assert training_energy(ResourceParams(E_tr=10.0)) == 10.0


def test_budget_usage_formula():
    p = ResourceParams()
    use = budget_usage(3, 4, p)
    c = (5 / 0.2) * compute_I0(5) + 0.002
    assert use.delay == pytest.approx(c * 4 * 9 + 0.14 * 4)
    assert use.energy == pytest.approx(10 * 12 + 1.5 * 0.14 * 4)
    assert p.E_cm == pytest.approx(0.21)


@given(tau=st.integers(1, 40), t_tot=st.floats(1, 1e4), E_tot=st.floats(1, 1e4))
@settings(max_examples=100, deadline=None)
def test_max_rounds_is_tight(tau, t_tot, E_tot):
    p = ResourceParams(t_tot=t_tot, E_tot=E_tot, E_tr=0.5, mu=5.0)
    K = max_rounds(tau, p)
    if K > 0:
        assert budget_usage(tau, K, p).feasible
    assert not budget_usage(tau, K + 1, p).feasible


def test_invalid_params():
    with pytest.raises(ValueError):
        ResourceParams(mu=0.0)
    with pytest.raises(ValueError):
        expected_training_delay(0, ResourceParams())
