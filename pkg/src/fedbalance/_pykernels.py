"""Pure numpy implementation of the training kernels (import fallback)."""
from __future__ import annotations

import numpy as np

MSE, LOGISTIC, HINGE = 0, 1, 2


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def loss_grad(X, y, w, kind, reg):
    m = X @ w
    n = X.shape[0]
    if kind == MSE:
        r = y - m
        value = float(r @ r) / n
        coef = -2.0 * r
    elif kind == LOGISTIC:
        z = -y * m
        value = float(np.logaddexp(0.0, z).sum()) / n
        coef = -y * _sigmoid(z)
    else:
        z = 1.0 - y * m
        active = z > 0
        value = float(z[active].sum()) / n
        coef = np.where(active, -y, 0.0)
    grad = (coef @ X) / n
    if reg:
        grad += reg * w
        value += 0.5 * reg * float(w @ w)
    return value, grad


def local_steps(X, y, w0, eta, steps, kind, reg, history=None):
    w = np.array(w0, dtype=np.float64, copy=True)
    for s in range(steps):
        _, g = loss_grad(X, y, w, kind, reg)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at local step {s + 1}")
        w -= eta * g
        if history is not None:
            history[s] = w
    return w
