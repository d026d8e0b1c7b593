"""Backend selection for the training kernels.

The compiled ``_ckernels`` module is used when it was built; otherwise the
numpy fallback. Set ``FEDBALANCE_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

MSE, LOGISTIC, HINGE = _pykernels.MSE, _pykernels.LOGISTIC, _pykernels.HINGE

_compiled = None
if not os.environ.get("FEDBALANCE_PURE"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "numpy"

loss_grad = _impl.loss_grad
local_steps = _impl.local_steps


def get_backend(name: str):
    """Return the kernel module for ``name`` ('cython' or 'numpy')."""
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
