"""Spiked matrix/tensor PCA: Y = lambda * v^{(x)k} + W, loss ||Y - x^{(x)k}||^2 + (alpha/2)||x||^2 (constant dropped)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, SummaryVec
from ..errors import SchemaError
from .base import Datum, ParamPoint, check_param, random_unit

SCHEMA = ("m", "r2")
# Materializing the full noise tensor is only allowed at toy sizes.
EXACT_MAX_ENTRIES = 15 ** 3


def contract_all_slots(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum over slots s of W(x, ..., x, . , x, ..., x) with the free index in slot s."""
    k = W.ndim
    out = np.zeros(x.shape[0])
    for s in range(k):
        T = np.moveaxis(W, s, -1)
        for _ in range(k - 1):
            T = np.tensordot(x, T, axes=(0, 0))
        out += T
    return out


def full_contraction(W: np.ndarray, x: np.ndarray) -> float:
    T = W
    for _ in range(W.ndim):
        T = np.tensordot(x, T, axes=(0, 0))
    return float(T)


@dataclass(frozen=True, eq=False)
class TensorPcaModel:
    n: int
    k: int
    lam: float
    alpha: float = 0.0
    spike: np.ndarray | None = None
    noise: str = "lazy"  # "lazy" | "exact"
    family: str = field(default="tensor", init=False)

    def __post_init__(self):
        if self.k < 2 or self.n < 2:
            raise ValueError("tensor PCA needs k >= 2 and n >= 2")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.noise not in ("lazy", "exact"):
            raise ValueError(f"unknown noise mode {self.noise!r}")
        if self.noise == "exact" and self.n ** self.k > EXACT_MAX_ENTRIES:
            raise ValueError("exact tensor noise is only supported for n^k <= 15^3")
        v = np.zeros(self.n) if self.spike is None else np.array(self.spike, dtype=float)
        if self.spike is None:
            v[0] = 1.0
        if v.shape != (self.n,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("spike must be a unit vector in R^n")
        v.setflags(write=False)
        object.__setattr__(self, "spike", v)

    schema = SCHEMA

    @property
    def param_dim(self) -> int:
        return self.n

    # --- data ---------------------------------------------------------------------------
    def sample_datum(self, rng: RngStream) -> Datum:
        if self.noise == "exact":
            return Datum(self.family, ("exact", rng.normal((self.n,) * self.k)))
        return Datum(self.family, ("lazy", rng.normal(self.n), float(rng.normal())))

    def noise_contraction(self, x: np.ndarray, d: Datum) -> np.ndarray:
        """G(x) = sum over slots of W(x, ..., ., ..., x).

        The lazy datum holds standard normals (xi, zeta) and returns
        ``sqrt(k) R^{k-1} xi + sqrt(k(k-1)) R^{k-2} zeta x``, a Gaussian vector with the
        covariance ``k R^{2k-2} I + k(k-1) R^{2k-4} x x^T`` that an i.i.d. tensor produces.
        """
        kind = d.payload[0]
        if kind == "exact":
            return contract_all_slots(d.payload[1], x)
        _, xi, zeta = d.payload
        k = self.k
        R2 = float(x @ x)
        a = np.sqrt(k) * R2 ** ((k - 1) / 2)
        b = np.sqrt(k * (k - 1)) * (R2 ** ((k - 2) / 2) if k > 2 else 1.0)
        return a * xi + b * zeta * x

    # --- loss and gradient --------------------------------------------------------------
    def loss(self, x: ParamPoint, d: Datum) -> float:
        xv = check_param(self, x)
        m = float(xv @ self.spike)
        R2 = float(xv @ xv)
        if d.payload[0] == "exact":
            wx = full_contraction(d.payload[1], xv)
        else:
            # Euler's identity <G(x), x> = k <W, x^k> for a k-linear form.
            wx = float(self.noise_contraction(xv, d) @ xv) / self.k
        return -2.0 * (wx + self.lam * m ** self.k) + R2 ** self.k + 0.5 * self.alpha * R2

    def grad_loss(self, x: ParamPoint, d: Datum) -> np.ndarray:
        xv = check_param(self, x)
        k = self.k
        m = float(xv @ self.spike)
        R2 = float(xv @ xv)
        G = self.noise_contraction(xv, d)
        return (-2.0 * G - 2.0 * self.lam * k * m ** (k - 1) * self.spike
                + (2.0 * k * R2 ** (k - 1) + self.alpha) * xv)

    # --- summaries ----------------------------------------------------------------------
    def summary(self, x: ParamPoint) -> SummaryVec:
        xv = check_param(self, x)
        m = float(xv @ self.spike)
        perp = xv - m * self.spike
        return SummaryVec(SCHEMA, np.array([m, float(perp @ perp)]))

    def population_loss(self, u: SummaryVec) -> float:
        if u.schema != SCHEMA:
            raise SchemaError(f"expected schema {SCHEMA}, got {u.schema}")
        m, r2 = u.values
        R2 = m * m + r2
        return float(-2.0 * self.lam * m ** self.k + R2 ** self.k + 0.5 * self.alpha * R2)

    # --- initializations ----------------------------------------------------------------
    def init_random(self, rng: RngStream) -> ParamPoint:
        return ParamPoint(self.family, rng.normal(self.n) / np.sqrt(self.n))

    def warm_start(self, target: SummaryVec, rng: RngStream) -> ParamPoint:
        """x = m v + r e with e a uniformly random unit vector orthogonal to the spike."""
        m, r2 = target["m"], target["r2"]
        if r2 < 0:
            raise ValueError("r2 must be non-negative")
        z = rng.normal(self.n)
        z -= (z @ self.spike) * self.spike
        e = z / np.linalg.norm(z)
        return ParamPoint(self.family, m * self.spike + np.sqrt(r2) * e)


@dataclass(frozen=True)
class VFactor:
    """V = c_xx * x x^T + c_id * I, kept in factored form."""

    c_xx: float
    c_id: float
    x: np.ndarray

    def dense(self) -> np.ndarray:
        return self.c_xx * np.outer(self.x, self.x) + self.c_id * np.eye(self.x.shape[0])


def tensor_pca_V(model: TensorPcaModel, x: ParamPoint) -> VFactor:
    """Per-sample gradient-noise covariance Cov(grad H) at x."""
    xv = check_param(model, x)
    k = model.k
    R2 = float(xv @ xv)
    c_xx = 4.0 * k * (k - 1) * (R2 ** (k - 2) if k > 2 else 1.0)
    c_id = 4.0 * k * R2 ** (k - 1)
    return VFactor(c_xx, c_id, xv.copy())


def random_spike(n: int, rng: RngStream) -> np.ndarray:
    return random_unit(n, rng)
