"""Limiting dynamics of the summary statistics for spiked matrix/tensor PCA."""

from __future__ import annotations

import numpy as np

from ..core import SummaryVec
from ..errors import ConfigError, DomainError
from .integrators import OdeSystem, SdeSystem

BALLISTIC_SCHEMA = ("m", "r2")
LOSS_SCHEMA = ("m", "r2", "Phi")
DIFFUSIVE_SCHEMA = ("mt", "r2")
DOUBLE_DIFFUSIVE_SCHEMA = ("mt", "rt")


def _pow(m, p):
    # m**0 == 1 even at m == 0, which is the k = 2 convention for m^{k-2}
    return np.power(m, p) if p != 0 else np.ones_like(m)


def ballistic_field(vals: np.ndarray, k: int, lam: float, c_delta: float, alpha: float = 0.0) -> np.ndarray:
    """(dm/dt, dr2/dt) = (-f + g) for the pair (m, r_perp^2).

    dm/dt  = 2m(lam k m^{k-2} - k R^{2(k-1)}) - alpha m
    dr2/dt = -(4 r2 - 4 c_delta) k R^{2(k-1)} - 2 alpha r2,   R^2 = m^2 + r2.

    Works on a single state (2,) or a batch (B, 2).
    """
    m, r2 = vals[..., 0], vals[..., 1]
    R2 = m * m + r2
    kR = k * _pow(R2, k - 1)
    dm = 2.0 * m * (lam * k * _pow(m, k - 2) - kR) - alpha * m
    dr2 = -(4.0 * r2 - 4.0 * c_delta) * kR - 2.0 * alpha * r2
    return np.stack([dm, dr2], axis=-1)


def corrector_part(vals: np.ndarray, k: int, c_delta: float) -> np.ndarray:
    """The g part alone: zero for m, 4 c_delta k R^{2(k-1)} for r2 (linear in c_delta)."""
    m, r2 = vals[..., 0], vals[..., 1]
    R2 = m * m + r2
    return np.stack([np.zeros_like(m), 4.0 * c_delta * k * _pow(R2, k - 1)], axis=-1)


def tensor_pca_ballistic_rhs(u: SummaryVec, k: int, lam: float, c_delta: float = 1.0,
                             alpha: float = 0.0) -> SummaryVec:
    if u["r2"] < 0:
        raise DomainError(f"r_perp^2 must be non-negative, got {u['r2']}")
    return SummaryVec(BALLISTIC_SCHEMA, ballistic_field(u.values, k, lam, c_delta, alpha))


def loss_drift(vals: np.ndarray, k: int, lam: float, c_delta: float) -> np.ndarray:
    """dPhi/dt along the ballistic flow (alpha = 0)."""
    m, r2 = vals[..., 0], vals[..., 1]
    R2 = m * m + r2
    a = lam * lam * _pow(m, 2 * (k - 2)) - 2.0 * lam * _pow(m, k - 2) * _pow(R2, k - 1) + _pow(R2, 2 * k - 2)
    return -4.0 * k * k * m * m * a - 4.0 * k * k * _pow(R2, 2 * (k - 1)) * (r2 - c_delta)


def loss_field(vals: np.ndarray, k: int, lam: float, c_delta: float) -> np.ndarray:
    base = ballistic_field(vals[..., :2], k, lam, c_delta, 0.0)
    return np.concatenate([base, loss_drift(vals, k, lam, c_delta)[..., None]], axis=-1)


def tensor_pca_loss_rhs(u: SummaryVec, k: int, lam: float, c_delta: float = 1.0) -> SummaryVec:
    if u["r2"] < 0:
        raise DomainError(f"r_perp^2 must be non-negative, got {u['r2']}")
    return SummaryVec(LOSS_SCHEMA, loss_field(u.values, k, lam, c_delta))


def _checked(field):
    def rhs(v):
        if np.any(v[..., 1] < 0):
            raise DomainError("r_perp^2 must be non-negative")
        return field(v)
    return rhs


def ballistic_system(k: int, lam: float, c_delta: float = 1.0, alpha: float = 0.0) -> OdeSystem:
    return OdeSystem(BALLISTIC_SCHEMA, _checked(lambda v: ballistic_field(v, k, lam, c_delta, alpha)),
                     "tensor-ballistic")


def loss_system(k: int, lam: float, c_delta: float = 1.0) -> OdeSystem:
    return OdeSystem(LOSS_SCHEMA, _checked(lambda v: loss_field(v, k, lam, c_delta)), "tensor-loss")


def tensor_pca_diffusive(k: int, lam: float, Lambda: float | None = None) -> SdeSystem:
    """SDE for (m~, r_perp^2) with m~ = sqrt(n) m near the equator.

    Finite-lambda mode: dm~ = 2m~(2 lam 1_{k=2} - k r^{2(k-1)}) dt + 2 sqrt(k r^{2(k-1)}) dB.
    Lambda mode (k >= 3, lam_n = Lambda n^{(k-2)/2}): drift 2m~(k Lambda - k r^{2(k-1)}).
    r_perp^2 is deterministic: dr2 = -4k r^{2(k-1)}(r2 - 1) dt.
    """
    if Lambda is not None and k == 2:
        raise ConfigError("Lambda scaling mode needs k >= 3")
    growth = k * Lambda if Lambda is not None else (2.0 * lam if k == 2 else 0.0)

    def drift(v):
        mt, r2 = v[..., 0], v[..., 1]
        kr = k * _pow(r2, k - 1)
        return np.stack([2.0 * mt * (growth - kr), -4.0 * kr * (r2 - 1.0)], axis=-1)

    def factor(v):
        r2 = np.asarray(v)[..., 1]
        if np.any(r2 < 0):
            raise DomainError("r_perp^2 must be non-negative")
        vol = 2.0 * np.sqrt(k * _pow(r2, k - 1))
        F = np.zeros(np.shape(v)[:-1] + (2, 1))
        F[..., 0, 0] = vol
        return F

    return SdeSystem(DIFFUSIVE_SCHEMA, drift, factor, 1, "tensor-diffusive")


def tensor_pca_double_diffusive(k: int, lam: float) -> SdeSystem:
    """Decoupled OU pair for (m~, r~) = (sqrt(n) m, sqrt(n)(r_perp^2 - 1)).

    dm~ = 2k(lam 1_{k=2} - 1) m~ dt + 2 sqrt(k) dB1,  dr~ = -4k r~ dt + 2 sqrt(k(k-1)) dB2.
    """
    b_m = 2.0 * k * ((lam if k == 2 else 0.0) - 1.0)
    b_r = -4.0 * k
    F0 = np.diag([2.0 * np.sqrt(k), 2.0 * np.sqrt(k * (k - 1))])

    def drift(v):
        return np.stack([b_m * v[..., 0], b_r * v[..., 1]], axis=-1)

    def factor(v):
        return F0

    return SdeSystem(DOUBLE_DIFFUSIVE_SCHEMA, drift, factor, 2, "tensor-double-diffusive",
                     constant_factor=True)
