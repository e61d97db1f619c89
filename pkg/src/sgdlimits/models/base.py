"""Parameter points, data and the dense online-SGD loop shared by every model family."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from ..core import RngStream, SummaryVec, Trajectory
from ..errors import DivergenceError, SchemaError


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def relu(x):
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class ParamPoint:
    family: str
    vector: np.ndarray

    def __post_init__(self):
        vec = np.array(self.vector, dtype=float).reshape(-1)
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class Datum:
    """One sample. ``payload`` is model specific: noise draws for tensor PCA, ``(y, X)`` for mixtures."""

    family: str
    payload: Any


class Model(Protocol):
    family: str
    schema: tuple[str, ...]
    param_dim: int

    def sample_datum(self, rng: RngStream) -> Datum: ...
    def grad_loss(self, x: ParamPoint, d: Datum) -> np.ndarray: ...
    def summary(self, x: ParamPoint) -> SummaryVec: ...


def check_param(model, x: ParamPoint) -> np.ndarray:
    if x.family != model.family or x.dim != model.param_dim:
        raise SchemaError(f"parameter point ({x.family}, dim {x.dim}) does not match "
                          f"model ({model.family}, dim {model.param_dim})")
    return x.vector


def _step(model, x: np.ndarray, delta: float, rng: RngStream, step: int) -> np.ndarray:
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return x - delta * model.grad_loss(ParamPoint(model.family, x), model.sample_datum(rng))
    except OverflowError as exc:
        raise DivergenceError(f"SGD diverged at step {step}", step=step, time=step * delta) from exc


def sgd_run(model, x0: ParamPoint, delta: float, steps: int, rng: RngStream,
            record_stride: int = 1) -> Trajectory:
    """Online SGD ``X_l = X_{l-1} - delta * grad L(X_{l-1}, Y_l)`` with a fresh datum every step.

    Records ``summary(X_l)`` at ``t = l * delta`` every ``record_stride`` steps and at the last step.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    x = np.array(check_param(model, x0), dtype=float)
    times = [0.0]
    rows = [model.summary(x0).values]
    for step in range(1, steps + 1):
        x = _step(model, x, delta, rng, step)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"SGD diverged at step {step}", step=step, time=step * delta)
        if step % record_stride == 0 or step == steps:
            times.append(step * delta)
            rows.append(model.summary(ParamPoint(model.family, x)).values)
    return Trajectory(model.schema, np.array(times), np.array(rows))


def final_point(model, x0: ParamPoint, delta: float, steps: int, rng: RngStream) -> ParamPoint:
    """Same loop as :func:`sgd_run` but returns the last iterate itself."""
    x = np.array(check_param(model, x0), dtype=float)
    for step in range(1, steps + 1):
        x = _step(model, x, delta, rng, step)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"SGD diverged at step {step}", step=step, time=step * delta)
    return ParamPoint(model.family, x)


def random_unit(n: int, rng: RngStream) -> np.ndarray:
    z = rng.normal(n)
    return z / np.linalg.norm(z)
