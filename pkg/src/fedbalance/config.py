"""Flat ``key = value`` experiment configuration.

Keys follow the usual symbol names (mu, a, t_cm, P_cm, E_tr, t_tot, E_tot,
N, rho, eta, grad_f_star, ...). Lines starting with ``#`` are comments.
``auto`` stands for an unset optional value; tuples are comma-separated.
"""
from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass
from pathlib import Path

from .bounds import ConvergenceConstants
from .resources import ResourceParams

MODES = ("solve", "simulate", "sweep", "bounds", "compare")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "simulate"
    seed: int = 0
    # model and data
    model: str = "hinge"
    reg: float = 0.0
    dataset: str = "synthetic"
    n_samples: int = 1000
    dim: int = 10
    separation: float = 2.0
    idx_images: str | None = None
    idx_labels: str | None = None
    subset: int | None = None
    test_fraction: float = 0.2
    scheme: str = "iid"
    N: int = 5
    init: str = "zeros"
    # learning / convergence constants
    eta: float = 0.1
    rho: float | None = None
    grad_f_star: float | None = None
    epsilon: float | None = None
    tau_max: int = 20
    # system parameters
    mu: float = 0.2
    a: float = 0.002
    t_cm: float | None = 0.14
    P_cm: float = 1.5
    E_tr: float | None = 10.0
    t_tot: float = 200.0
    E_tot: float = 1500.0
    kappa: float = 1e-28
    C: float = 1e4
    D_max: int = 1000
    cpu_freq: float = 2e9
    B: float = 1e6
    N0: float = 1e-9
    h: tuple[float, ...] = ()
    Z: float = 1e6
    heterogeneous: bool = False
    # run control
    tau: int | None = None
    K: int | None = None
    tau_values: tuple[int, ...] = (1, 2, 5, 10, 20)
    enforce_budget: bool = False
    delay_mode: str = "expected"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.dataset not in ("synthetic", "idx"):
            raise ValueError("dataset must be 'synthetic' or 'idx'")
        if self.dataset == "idx":
            for key in ("idx_images", "idx_labels"):
                path = getattr(self, key)
                if path is None or not Path(path).is_file():
                    raise ValueError(f"{key} must name an existing file, got {path!r}")
        if self.init not in ("zeros", "gaussian"):
            raise ValueError("init must be 'zeros' or 'gaussian'")
        for key in ("n_samples", "dim", "N", "tau_max", "eta"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive")
        if any(t < 1 for t in self.tau_values):
            raise ValueError("tau_values must be positive")

    def resources(self) -> ResourceParams:
        names = {f.name for f in dataclasses.fields(ResourceParams)}
        return ResourceParams(**{k: getattr(self, k) for k in names})

    def constants(self, **estimated) -> ConvergenceConstants:
        """Configured constants, with ``auto`` entries taken from ``estimated``."""
        vals = {}
        for key in ("rho", "grad_f_star", "epsilon"):
            v = getattr(self, key)
            if v is None:
                if key not in estimated:
                    raise ValueError(f"{key} is auto but no estimate was supplied")
                v = estimated[key]
            vals[key] = v
        extra = {k: v for k, v in estimated.items() if k in ("delta_i", "delta", "beta")}
        return ConvergenceConstants(eta=self.eta, tau_max=self.tau_max, **vals, **extra)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


def _parse_value(text: str, hint):
    text = text.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType) and type(None) in args:
        if text.lower() in ("auto", "none", ""):
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _parse_value(text, inner)
    if origin is tuple:
        return tuple(_parse_value(p, args[0]) for p in text.split(",") if p.strip())
    if hint is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, **overrides) -> ExperimentConfig:
    hints = typing.get_type_hints(ExperimentConfig)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in hints:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(val, hints[key])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    values.update(overrides)
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)


def dump_config(config: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(config, f.name))}\n"
                   for f in dataclasses.fields(config))
