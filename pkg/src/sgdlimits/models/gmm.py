"""Two-layer ReLU networks with a logistic readout trained on Gaussian mixtures.

Parameters are ``(v, W)`` with ``v`` in R^K and ``W`` a K x N first layer, flattened as
``concat(v, W.ravel())``. Per-sample loss

    L = -y v.g(WX) + log(1 + exp(v.g(WX))) + (alpha/2)(|v|^2 + |W|_F^2),  g = ReLU.

``BgmmModel``: K = 2, X ~ N((2y-1) mu, I/lambda).
``XorGmmModel``: class y = 1 has means +-mu, class y = 0 has means +-nu, each component with
probability 1/4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, SummaryVec
from ..errors import SchemaError
from .base import Datum, ParamPoint, check_param, relu, sigmoid


def r_name(i: int, j: int, K: int) -> str:
    """Name of the Gram entry R_ij (1-based, i <= j)."""
    return f"R{i}{j}" if K < 10 else f"R{i}_{j}"


def gram_pairs(K: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(K) for j in range(i, K)]


def gram_from_values(vals: np.ndarray, K: int) -> np.ndarray:
    R = np.zeros((K, K))
    for val, (i, j) in zip(vals, gram_pairs(K)):
        R[i, j] = R[j, i] = val
    return R


def gram_to_values(R: np.ndarray) -> np.ndarray:
    K = R.shape[0]
    return np.array([R[i, j] for i, j in gram_pairs(K)])


def check_gram(R: np.ndarray, tol: float = 1e-10) -> None:
    scale = max(1.0, float(np.abs(R).max()) if R.size else 1.0)
    lo = float(np.linalg.eigvalsh(R).min()) if R.size else 0.0
    assert lo >= -tol * scale, f"orthogonal Gram matrix not PSD (min eigenvalue {lo})"


def gram_factor(R: np.ndarray) -> np.ndarray:
    """F with F F^T = R, via a clamped eigendecomposition (R may be singular)."""
    w, U = np.linalg.eigh(0.5 * (R + R.T))
    return U * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True, eq=False)
class _TwoLayerGmm:
    N: int
    K: int
    lam: float
    alpha: float
    means: np.ndarray  # (C, N): orthonormal directions appearing in component means
    family: str = field(default="", init=False)

    # components: (direction index, sign, label)
    components: tuple = field(default=(), init=False)

    def _check_means(self):
        M = np.array(self.means, dtype=float).reshape(-1, self.N)
        if not np.allclose(M @ M.T, np.eye(M.shape[0]), atol=1e-12, rtol=0):
            raise ValueError("mean directions must be orthonormal")
        M.setflags(write=False)
        object.__setattr__(self, "means", M)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")

    @property
    def param_dim(self) -> int:
        return self.K + self.K * self.N

    @property
    def noise_scale(self) -> float:
        return 0.0 if np.isinf(self.lam) else 1.0 / np.sqrt(self.lam)

    def split(self, x: ParamPoint) -> tuple[np.ndarray, np.ndarray]:
        vec = check_param(self, x)
        return vec[: self.K], vec[self.K:].reshape(self.K, self.N)

    def join(self, v: np.ndarray, W: np.ndarray) -> ParamPoint:
        return ParamPoint(self.family, np.concatenate([np.asarray(v, float), np.asarray(W, float).ravel()]))

    # --- data ---------------------------------------------------------------------------
    def sample_datum(self, rng: RngStream) -> Datum:
        c = int(rng.uniform() * len(self.components))
        idx, sign, y = self.components[c]
        X = sign * self.means[idx]
        if self.noise_scale > 0:
            X = X + self.noise_scale * rng.normal(self.N)
        return Datum(self.family, (y, X))

    # --- loss and gradient --------------------------------------------------------------
    def loss(self, x: ParamPoint, d: Datum) -> float:
        v, W = self.split(x)
        y, X = d.payload
        z = float(v @ relu(W @ X))
        return (-y * z + float(np.logaddexp(0.0, z))
                + 0.5 * self.alpha * (float(v @ v) + float(np.sum(W * W))))

    def grad_loss(self, x: ParamPoint, d: Datum) -> np.ndarray:
        v, W = self.split(x)
        y, X = d.payload
        if X.shape != (self.N,):
            raise SchemaError(f"datum has dimension {X.shape}, model expects ({self.N},)")
        a = W @ X
        g = relu(a)
        s = float(sigmoid(v @ g)) - y
        grad_v = g * s + self.alpha * v
        grad_W = np.outer(v * (a >= 0) * s, X) + self.alpha * W
        return np.concatenate([grad_v, grad_W.ravel()])

    # --- summaries ----------------------------------------------------------------------
    def summary_parts(self, x: ParamPoint):
        v, W = self.split(x)
        M = W @ self.means.T  # (K, C) overlaps with mean directions
        Wp = W - M @ self.means
        R = Wp @ Wp.T
        check_gram(R)
        return v, M, R

    def init_random(self, rng: RngStream) -> ParamPoint:
        raise NotImplementedError

    def warm_start(self, target: SummaryVec, rng: RngStream) -> ParamPoint:
        """Lift a summary target: W_i = sum_c m_ic e_c + W_i^perp with W^perp = F Q,
        F F^T = R^perp and Q a uniformly random orthonormal K-frame orthogonal to the means."""
        v, M, R = self.parts_from_summary(target)
        C = self.means.shape[0]
        if self.N < C + self.K:
            raise ValueError("N too small for a warm start")
        Z = rng.normal((self.N, self.K))
        Z -= self.means.T @ (self.means @ Z)
        Q, _ = np.linalg.qr(Z)
        W = M @ self.means + gram_factor(R) @ Q.T
        return self.join(v, W)


@dataclass(frozen=True, eq=False)
class BgmmModel(_TwoLayerGmm):
    N: int = 2
    K: int = 2
    lam: float = 1.0
    alpha: float = 0.0
    means: np.ndarray | None = None

    def __post_init__(self):
        if self.K != 2:
            raise ValueError("the binary mixture model has K = 2")
        if self.means is None:
            mu = np.zeros(self.N)
            mu[0] = 1.0
            object.__setattr__(self, "means", mu[None, :])
        self._check_means()
        if self.means.shape[0] != 1:
            raise ValueError("bGMM has a single mean direction")
        object.__setattr__(self, "family", "bgmm")
        object.__setattr__(self, "components", ((0, 1.0, 1), (0, -1.0, 0)))

    @property
    def mu(self) -> np.ndarray:
        return self.means[0]

    schema = ("v1", "v2", "m1", "m2", "R11", "R12", "R22")

    def summary(self, x: ParamPoint) -> SummaryVec:
        v, M, R = self.summary_parts(x)
        return SummaryVec(self.schema, np.concatenate([v, M[:, 0], gram_to_values(R)]))

    def parts_from_summary(self, u: SummaryVec):
        if u.schema != self.schema:
            raise SchemaError(f"expected schema {self.schema}, got {u.schema}")
        vals = u.values
        return vals[0:2], vals[2:4, None], gram_from_values(vals[4:], 2)

    def population_loss(self, u: SummaryVec) -> float:
        """lambda = infinity population loss."""
        v, M, R = self.parts_from_summary(u)
        m = M[:, 0]
        return float(0.5 * (np.logaddexp(0.0, -v @ relu(m)) + np.logaddexp(0.0, v @ relu(-m)))
                     + 0.5 * self.alpha * (v @ v + m @ m + np.trace(R)))

    def init_random(self, rng: RngStream) -> ParamPoint:
        v = rng.normal(2)
        W = rng.normal((2, self.N)) * (0.0 if np.isinf(self.lam) else 1.0 / np.sqrt(self.lam * self.N))
        return self.join(v, W)


def xor_schema(K: int) -> tuple[str, ...]:
    return (tuple(f"v{i + 1}" for i in range(K))
            + tuple(f"mmu{i + 1}" for i in range(K))
            + tuple(f"mnu{i + 1}" for i in range(K))
            + tuple(r_name(i + 1, j + 1, K) for i, j in gram_pairs(K)))


@dataclass(frozen=True, eq=False)
class XorGmmModel(_TwoLayerGmm):
    N: int = 3
    K: int = 4
    lam: float = 1.0
    alpha: float = 0.0
    means: np.ndarray | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.means is None:
            M = np.zeros((2, self.N))
            M[0, 0] = 1.0
            M[1, 1] = 1.0
            object.__setattr__(self, "means", M)
        self._check_means()
        if self.means.shape[0] != 2:
            raise ValueError("XOR needs two orthonormal mean directions (mu, nu)")
        object.__setattr__(self, "family", "xor")
        object.__setattr__(self, "components",
                           ((0, 1.0, 1), (0, -1.0, 1), (1, 1.0, 0), (1, -1.0, 0)))
        object.__setattr__(self, "schema", xor_schema(self.K))

    @property
    def mu(self) -> np.ndarray:
        return self.means[0]

    @property
    def nu(self) -> np.ndarray:
        return self.means[1]

    def summary(self, x: ParamPoint) -> SummaryVec:
        v, M, R = self.summary_parts(x)
        return SummaryVec(self.schema, np.concatenate([v, M[:, 0], M[:, 1], gram_to_values(R)]))

    def parts_from_summary(self, u: SummaryVec):
        if u.schema != self.schema:
            raise SchemaError(f"expected schema of length {len(self.schema)}, got {u.schema}")
        K = self.K
        vals = u.values
        return vals[:K], np.stack([vals[K:2 * K], vals[2 * K:3 * K]], axis=1), gram_from_values(vals[3 * K:], K)

    def population_loss(self, u: SummaryVec) -> float:
        """lambda = infinity population loss (average over the four noiseless components)."""
        v, M, R = self.parts_from_summary(u)
        mmu, mnu = M[:, 0], M[:, 1]
        sp = lambda z: np.logaddexp(0.0, z)
        data = 0.25 * (sp(-v @ relu(mmu)) + sp(-v @ relu(-mmu)) + sp(v @ relu(mnu)) + sp(v @ relu(-mnu)))
        return float(data + 0.5 * self.alpha * (v @ v + mmu @ mmu + mnu @ mnu + np.trace(R)))

    def init_random(self, rng: RngStream) -> ParamPoint:
        v = rng.normal(self.K)
        W = rng.normal((self.K, self.N)) / np.sqrt(self.N)
        return self.join(v, W)
