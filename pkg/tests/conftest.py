from __future__ import annotations

import numpy as np
import pytest

from fedbalance import kernels
from fedbalance.data import make_blobs
from fedbalance.models import LossModel, partition

BACKENDS = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = kernels.get_backend(request.param)
    monkeypatch.setattr(kernels, "loss_grad", mod.loss_grad)
    monkeypatch.setattr(kernels, "local_steps", mod.local_steps)
    return request.param


@pytest.fixture
def blobs():
    return make_blobs(200, 4, 2.0, seed=3)


@pytest.fixture
def iid5(blobs):
    return partition(blobs, 5, "iid", seed=1)


@pytest.fixture(params=["mse", "logistic", "hinge"])
def model(request):
    return LossModel(request.param)


def rand_problem(seed, n=30, d=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return X, y, rng.standard_normal(d)
