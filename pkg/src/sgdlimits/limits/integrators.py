"""ODE/SDE system containers and fixed-step integrators (RK4, Euler-Maruyama)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import RngStream, SummaryVec, Trajectory
from ..errors import DivergenceError, DomainError, SchemaError

CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class OdeSystem:
    """du/dt = rhs(u). ``rhs`` maps a raw value array to a raw value array."""

    schema: tuple[str, ...]
    rhs: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, u: SummaryVec) -> SummaryVec:
        _check_schema(self.schema, u)
        return SummaryVec(self.schema, self.rhs(u.values))


@dataclass(frozen=True)
class SdeSystem:
    """du = drift(u) dt + factor(u) dB.

    ``drift`` and ``factor`` accept a single state of shape (d,) or a batch of shape (B, d);
    ``factor`` returns (d, q) or (B, d, q) with factor @ factor.T = Sigma.
    """

    schema: tuple[str, ...]
    drift: Callable[[np.ndarray], np.ndarray]
    factor: Callable[[np.ndarray], np.ndarray]
    noise_dim: int
    name: str = ""
    constant_factor: bool = False

    def sigma(self, u: SummaryVec | np.ndarray) -> np.ndarray:
        vals = u.values if isinstance(u, SummaryVec) else np.asarray(u, float)
        F = self.factor(vals)
        return F @ F.T

    def drift_at(self, u: SummaryVec) -> SummaryVec:
        _check_schema(self.schema, u)
        return SummaryVec(self.schema, self.drift(u.values))


@dataclass
class McConfig:
    """Monte Carlo budget for Gaussian functionals.

    Every evaluation replays the same draws from ``stream`` (common random numbers), so an
    MC-backed vector field is a deterministic function of the state.
    """

    samples: int = 100_000
    stream: RngStream = field(default_factory=lambda: RngStream(0, 0))

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("samples must be at least 2 (antithetic pairs)")
        self._cache: dict[int, np.ndarray] = {}

    @property
    def pairs(self) -> int:
        return self.samples // 2

    def normals(self, dim: int) -> np.ndarray:
        """(pairs, dim) standard normals; the antithetic partner of each row is its negation."""
        if dim not in self._cache:
            rng = self.stream.child(dim)
            self._cache[dim] = rng.normal((self.pairs, dim))
        return self._cache[dim]


def _check_schema(schema, u: SummaryVec) -> None:
    if tuple(u.schema) != tuple(schema):
        raise SchemaError(f"state schema {u.schema} does not match system schema {schema}")


def psd_sqrt(M: np.ndarray, clamp_tol: float = CLAMP_TOL) -> np.ndarray:
    """Symmetric PSD square root by eigendecomposition, clamping eigenvalues in [-tol, 0]."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SchemaError("psd_sqrt needs a square matrix")
    if not np.allclose(M, M.T, atol=1e-12, rtol=1e-10):
        raise DomainError("psd_sqrt needs a symmetric matrix")
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    if w.size and w.min() < -clamp_tol:
        raise DomainError(f"matrix is not PSD: smallest eigenvalue {w.min():.3e}")
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


def _grid(T: float, h: float) -> np.ndarray:
    if h <= 0:
        raise ValueError("step h must be positive")
    if T <= 0:
        raise ValueError("horizon T must be positive")
    n = int(np.ceil(T / h - 1e-9))
    ts = np.arange(n + 1) * h
    ts[-1] = T
    if n >= 1 and ts[-1] <= ts[-2]:
        ts = ts[:-1]
        ts[-1] = T
    return ts


def rk4_integrate(sys: OdeSystem, u0: SummaryVec, T: float, h: float = 1e-3,
                  record_stride: int = 1) -> Trajectory:
    """Classical fixed-step RK4; the final step is shortened to land exactly on T."""
    _check_schema(sys.schema, u0)
    ts = _grid(T, h)
    u = u0.values.astype(float).copy()
    times, rows = [0.0], [u.copy()]
    f = sys.rhs
    for i in range(1, len(ts)):
        dt = ts[i] - ts[i - 1]
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.5 * dt * k2)
        k4 = f(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"non-finite state at t={ts[i]:.6g}", step=i, time=float(ts[i]))
        if i % record_stride == 0 or i == len(ts) - 1:
            times.append(ts[i])
            rows.append(u.copy())
    return Trajectory(sys.schema, np.array(times), np.array(rows))


def euler_maruyama(sys: SdeSystem, u0: SummaryVec, T: float, h: float, rng: RngStream,
                   record_stride: int = 1) -> Trajectory:
    """u_{t+h} = u_t + drift(u_t) h + factor(u_t) sqrt(h) xi, xi ~ N(0, I_q)."""
    _check_schema(sys.schema, u0)
    ts = _grid(T, h)
    u = u0.values.astype(float).copy()
    times, rows = [0.0], [u.copy()]
    xi_all = rng.normal((len(ts) - 1, sys.noise_dim))
    F_const = sys.factor(u) if sys.constant_factor else None
    for i in range(1, len(ts)):
        dt = ts[i] - ts[i - 1]
        F = F_const if F_const is not None else sys.factor(u)
        u = u + sys.drift(u) * dt + F @ xi_all[i - 1] * np.sqrt(dt)
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"non-finite state at t={ts[i]:.6g}", step=i, time=float(ts[i]))
        if i % record_stride == 0 or i == len(ts) - 1:
            times.append(ts[i])
            rows.append(u.copy())
    return Trajectory(sys.schema, np.array(times), np.array(rows))


def euler_maruyama_paths(sys: SdeSystem, u0: SummaryVec, T: float, h: float,
                         streams: list[RngStream], record_stride: int = 1) -> np.ndarray:
    """Many independent Euler-Maruyama paths at once, one stream per path.

    Returns (times, values) with values of shape (paths, records, d). Path i is identical to
    ``euler_maruyama(sys, u0, T, h, streams[i])``.
    """
    _check_schema(sys.schema, u0)
    ts = _grid(T, h)
    P = len(streams)
    U = np.tile(u0.values.astype(float), (P, 1))
    xi = np.stack([s.normal((len(ts) - 1, sys.noise_dim)) for s in streams], axis=1)
    times, rows = [0.0], [U.copy()]
    for i in range(1, len(ts)):
        dt = ts[i] - ts[i - 1]
        F = sys.factor(U)
        noise = xi[i - 1] @ F.T if F.ndim == 2 else np.einsum("bdq,bq->bd", F, xi[i - 1])
        U = U + sys.drift(U) * dt + noise * np.sqrt(dt)
        if not np.all(np.isfinite(U)):
            raise DivergenceError(f"non-finite state at t={ts[i]:.6g}", step=i, time=float(ts[i]))
        if i % record_stride == 0 or i == len(ts) - 1:
            times.append(ts[i])
            rows.append(U.copy())
    return np.array(times), np.stack(rows, axis=1)
