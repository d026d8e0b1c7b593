# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loss/gradient and local gradient-descent loops.

Semantics match ``fedbalance._pykernels`` exactly; only the summation order
inside a dot product may differ (sequential here, BLAS in numpy).
"""
import numpy as np

from libc.math cimport exp, log1p, isfinite

cdef enum:
    MSE = 0
    LOGISTIC = 1
    HINGE = 2


cdef inline double _softplus(double z) noexcept nogil:
    if z > 0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef double _loss_grad(const double[:, ::1] X, const double[::1] y,
                       const double[::1] w, int kind, double reg,
                       double[::1] grad) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, r, z, coef, total = 0.0, sq = 0.0

    for j in range(d):
        grad[j] = 0.0
    for i in range(n):
        m = 0.0
        for j in range(d):
            m += X[i, j] * w[j]
        if kind == MSE:
            r = y[i] - m
            total += r * r
            coef = -2.0 * r
        elif kind == LOGISTIC:
            z = -y[i] * m
            total += _softplus(z)
            coef = -y[i] * _sigmoid(z)
        else:
            z = 1.0 - y[i] * m
            if z > 0:
                total += z
                coef = -y[i]
            else:
                coef = 0.0
        if coef != 0.0:
            for j in range(d):
                grad[j] += coef * X[i, j]
    for j in range(d):
        grad[j] /= n
        if reg != 0.0:
            grad[j] += reg * w[j]
            sq += w[j] * w[j]
    return total / n + 0.5 * reg * sq


def loss_grad(const double[:, ::1] X, const double[::1] y, const double[::1] w,
              int kind, double reg):
    grad = np.empty(X.shape[1], dtype=np.float64)
    cdef double[::1] g = grad
    cdef double value
    with nogil:
        value = _loss_grad(X, y, w, kind, reg, g)
    return value, grad


def local_steps(const double[:, ::1] X, const double[::1] y, const double[::1] w0,
                double eta, Py_ssize_t steps, int kind, double reg,
                double[:, ::1] history=None):
    """Run ``steps`` gradient-descent updates; returns the final params.

    Row ``s`` of ``history`` (if given) receives the params after step s+1.
    Raises FloatingPointError on the first non-finite gradient.
    """
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t s, j
    cdef int bad = 0
    out = np.array(w0, dtype=np.float64, copy=True)
    grad = np.empty(d, dtype=np.float64)
    cdef double[::1] w = out
    cdef double[::1] g = grad
    cdef bint keep = history is not None

    with nogil:
        for s in range(steps):
            _loss_grad(X, y, w, kind, reg, g)
            for j in range(d):
                if not isfinite(g[j]):
                    bad = 1
                    break
            if bad:
                break
            for j in range(d):
                w[j] = w[j] - eta * g[j]
            if keep:
                for j in range(d):
                    history[s, j] = w[j]
    if bad:
        raise FloatingPointError(f"non-finite gradient at local step {s + 1}")
    return out
