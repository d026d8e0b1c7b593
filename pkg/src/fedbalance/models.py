"""Convex linear models, client datasets and partitioners.

Losses are per-sample means, so a size-weighted average of client losses
equals the loss on the pooled data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

LOSS_KINDS = {"mse": kernels.MSE, "logistic": kernels.LOGISTIC, "hinge": kernels.HINGE}


@dataclass(frozen=True)
class LossModel:
    """Linear predictor ``f(x) = w . x`` with one of three losses.

    Classification losses (``logistic``, ``hinge``) expect labels in {-1, +1}.
    ``reg`` adds ``reg/2 * ||w||^2``.
    """

    kind: str = "logistic"
    reg: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {sorted(LOSS_KINDS)}")
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")

    @property
    def code(self) -> int:
        return LOSS_KINDS[self.kind]


@dataclass(frozen=True, eq=False)
class ClientDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1:
            raise ValueError("features must be 2-D and labels 1-D")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one sample")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> ClientDataset:
        return ClientDataset(self.features[idx], self.labels[idx])

    @staticmethod
    def concat(parts: Sequence[ClientDataset]) -> ClientDataset:
        return ClientDataset(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
        )


@dataclass(frozen=True)
class Partition:
    clients: tuple[ClientDataset, ...]
    scheme: str
    seed: int | None = None
    sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.clients) < 1:
            raise ValueError("a partition needs at least one client")
        object.__setattr__(self, "sizes", np.array([c.size for c in self.clients], dtype=np.int64))

    @property
    def N(self) -> int:
        return len(self.clients)

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    def pooled(self) -> ClientDataset:
        return ClientDataset.concat(self.clients)


def _check_dims(params, data: ClientDataset) -> np.ndarray:
    w = np.ascontiguousarray(params, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != data.dim:
        raise ValueError(f"params of shape {w.shape} do not match feature dimension {data.dim}")
    return w


def loss(model: LossModel, params, data: ClientDataset) -> float:
    w = _check_dims(params, data)
    value, _ = kernels.loss_grad(data.features, data.labels, w, model.code, model.reg)
    return value


def gradient(model: LossModel, params, data: ClientDataset) -> np.ndarray:
    w = _check_dims(params, data)
    _, grad = kernels.loss_grad(data.features, data.labels, w, model.code, model.reg)
    return grad


def loss_and_gradient(model: LossModel, params, data: ClientDataset) -> tuple[float, np.ndarray]:
    w = _check_dims(params, data)
    return kernels.loss_grad(data.features, data.labels, w, model.code, model.reg)


def predict(params, features) -> np.ndarray:
    """Sign-threshold class prediction in {-1, +1}."""
    return np.where(np.asarray(features) @ np.asarray(params) > 0, 1.0, -1.0)


def accuracy(params, data: ClientDataset) -> float:
    return float(np.mean(predict(params, data.features) == np.sign(data.labels)))


def partition(data: ClientDataset, N: int, scheme: str = "iid", seed: int | None = 0) -> Partition:
    """Split ``data`` across ``N`` clients.

    ``iid`` shuffles with ``seed`` and deals near-equal shards. ``label-sorted``
    stable-sorts by label and cuts contiguous shards; when there are more
    clients than labels, client ``j`` takes label ``j mod L`` and the clients
    sharing a label split its samples contiguously, so every client stays
    label-homogeneous.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > data.size:
        raise ValueError(f"cannot split {data.size} samples across {N} clients")
    if scheme == "iid":
        perm = np.random.default_rng(seed).permutation(data.size)
        shards = np.array_split(perm, N)
    elif scheme == "label-sorted":
        order = np.argsort(data.labels, kind="stable")
        labels = np.unique(data.labels)
        if N <= len(labels):
            shards = np.array_split(order, N)
        else:
            shards = [None] * N
            sorted_labels = data.labels[order]
            for li, lab in enumerate(labels):
                owners = list(range(li, N, len(labels)))
                idx = order[sorted_labels == lab]
                if len(idx) < len(owners):
                    raise ValueError(f"label {lab} has {len(idx)} samples for {len(owners)} clients")
                for owner, chunk in zip(owners, np.array_split(idx, len(owners))):
                    shards[owner] = chunk
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}")
    return Partition(tuple(data.subset(s) for s in shards), scheme, seed)


def global_loss(partition: Partition, model: LossModel, params) -> float:
    """Size-weighted average of client losses, accumulated in client order."""
    total = 0.0
    for client in partition.clients:
        total += client.size * loss(model, params, client)
    return total / partition.total


def global_gradient(partition: Partition, model: LossModel, params) -> np.ndarray:
    total = np.zeros(partition.clients[0].dim)
    for client in partition.clients:
        total += client.size * gradient(model, params, client)
    return total / partition.total
