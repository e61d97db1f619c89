"""Batched SGD engines that evolve only the summary coordinates, exactly in law.

Every model here is invariant under rotations fixing the signal directions, so the law of
the next summary given the current iterate depends on the iterate only through its summary
(plus, for networks, the orthogonal Gram matrix). The engines below draw, at each step, just
the finitely many Gaussian coordinates of the datum that the update can see, plus a single
chi-square variable for the squared norm of the invisible remainder. The resulting Markov chain
on summaries has exactly the law of the dense iteration; it costs O(K^3) per step instead of
O(K N).

Each run owns an :class:`RngStream` and consumes it in fixed-size blocks of steps, so a run's
path does not depend on which other runs share its batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import RngStream, SummaryVec, Trajectory
from .base import ParamPoint, sigmoid
from .gmm import BgmmModel, XorGmmModel, gram_from_values, gram_to_values, _TwoLayerGmm
from .tensor_pca import TensorPcaModel

BLOCK = 512


@dataclass
class RunOutcome:
    trajectory: Trajectory | None  # recorded summaries; None for runs that diverged
    endpoint: SummaryVec | None
    diverged_step: int | None = None


class _BlockNoise:
    """Per-run block buffers of the per-step random inputs."""

    def __init__(self, streams: list[RngStream], draw):
        self.streams = streams
        self.draw = draw  # draw(rng, block) -> tuple of arrays with leading axis = block
        self.pos = BLOCK
        self.buf = None

    def next(self):
        if self.pos == BLOCK:
            parts = [self.draw(s, BLOCK) for s in self.streams]
            self.buf = tuple(np.stack([p[j] for p in parts], axis=1) for j in range(len(parts[0])))
            self.pos = 0
        out = tuple(b[self.pos] for b in self.buf)
        self.pos += 1
        return out


# --- tensor PCA ---------------------------------------------------------------------------

def tensor_state(model: TensorPcaModel, x: ParamPoint) -> np.ndarray:
    u = model.summary(x)
    return np.array([u["m"], np.sqrt(u["r2"])])


def tensor_state_from_summary(u: SummaryVec) -> np.ndarray:
    return np.array([u["m"], np.sqrt(max(u["r2"], 0.0))])


def tensor_random_state(model: TensorPcaModel, rng: RngStream) -> np.ndarray:
    """Summary of x0 ~ N(0, I/n): m ~ N(0, 1/n), r^2 ~ chi^2_{n-1} / n."""
    n = model.n
    m = rng.normal() / np.sqrt(n)
    r2 = rng.generator.chisquare(n - 1) / n
    return np.array([m, np.sqrt(r2)])


def run_tensor_batch(model: TensorPcaModel, states: np.ndarray, delta: float, steps: int,
                     streams: list[RngStream], record_stride: int) -> list[RunOutcome]:
    """states: (B, 2) rows (m, r) with x = m v + r e, r >= 0."""
    k, lam, alpha, n = model.k, model.lam, model.alpha, model.n
    m = states[:, 0].astype(float).copy()
    r = states[:, 1].astype(float).copy()
    B = m.shape[0]

    def draw(rng, size):
        return rng.normal((size, 3)), rng.generator.chisquare(n - 2, size)

    noise = _BlockNoise(streams, draw)
    rec_t, rec = [0.0], [np.stack([m, r * r], axis=1)]
    dead = np.full(B, -1)
    for step in range(1, steps + 1):
        z, chi = noise.next()
        R2 = m * m + r * r
        a = np.sqrt(k) * R2 ** ((k - 1) / 2)
        b = np.sqrt(k * (k - 1)) * (R2 ** ((k - 2) / 2) if k > 2 else 1.0)
        c = 2.0 * k * R2 ** (k - 1) + alpha
        m_new = m + delta * (2.0 * (a * z[:, 0] + b * z[:, 2] * m) + 2.0 * lam * k * m ** (k - 1) - c * m)
        e_new = r + delta * (2.0 * (a * z[:, 1] + b * z[:, 2] * r) - c * r)
        r = np.sqrt(e_new * e_new + 4.0 * delta * delta * a * a * chi)
        m = m_new
        bad = ~(np.isfinite(m) & np.isfinite(r))
        if bad.any():
            newly = bad & (dead < 0)
            dead[newly] = step
            m[bad] = 0.0
            r[bad] = 0.0
        if step % record_stride == 0 or step == steps:
            rec_t.append(step * delta)
            rec.append(np.stack([m, r * r], axis=1))
    return _outcomes(("m", "r2"), rec_t, rec, dead)


def _outcomes(schema, rec_t, rec, dead) -> list[RunOutcome]:
    times = np.array(rec_t)
    vals = np.stack(rec, axis=1)  # (B, T, d)
    out = []
    for i in range(vals.shape[0]):
        if dead[i] >= 0:
            out.append(RunOutcome(None, None, int(dead[i])))
        else:
            tr = Trajectory(schema, times, vals[i])
            out.append(RunOutcome(tr, tr.final()))
    return out


# --- two-layer networks on Gaussian mixtures -----------------------------------------------

@dataclass
class NetState:
    v: np.ndarray  # (K,)
    M: np.ndarray  # (K, C) overlaps with the mean directions
    R: np.ndarray  # (K, K) orthogonal Gram matrix


def net_state(model: _TwoLayerGmm, x: ParamPoint) -> NetState:
    v, M, R = model.summary_parts(x)
    return NetState(v.copy(), M.copy(), R.copy())


def net_state_from_summary(model: _TwoLayerGmm, u: SummaryVec) -> NetState:
    v, M, R = model.parts_from_summary(u)
    return NetState(np.array(v, float), np.array(M, float), np.array(R, float))


def net_random_state(model: _TwoLayerGmm, rng: RngStream) -> NetState:
    """Summary of the model's random initialization without building W.

    v ~ N(0, I_K) and W_i ~ N(0, s^2 I_N) i.i.d.; then M ~ N(0, s^2) entrywise and the
    orthogonal Gram is s^2 A A^T with A from the Bartlett decomposition of a Wishart(N - C) draw.
    """
    K, C, N = model.K, model.means.shape[0], model.N
    if isinstance(model, BgmmModel):
        s = 0.0 if np.isinf(model.lam) else 1.0 / np.sqrt(model.lam * N)
    else:
        s = 1.0 / np.sqrt(N)
    v = rng.normal(K)
    M = s * rng.normal((K, C))
    A = np.zeros((K, K))
    dof = N - C
    for i in range(K):
        A[i, i] = np.sqrt(rng.generator.chisquare(dof - i))
        A[i, :i] = rng.normal(i)
    return NetState(v, M, s * s * (A @ A.T))


def _batched_factor(R: np.ndarray) -> np.ndarray:
    """F with F F^T = R for a stack of PSD matrices.

    Cholesky with a jitter far below double-precision resolution of R; singular or slightly
    indefinite stacks fall back to a clamped eigendecomposition.
    """
    K = R.shape[-1]
    diag = np.einsum("bii->bi", R)
    jitter = 1e-15 * diag.max(axis=1) + 1e-300
    try:
        return np.linalg.cholesky(R + jitter[:, None, None] * np.eye(K))
    except np.linalg.LinAlgError:
        w, U = np.linalg.eigh(R)
        return U * np.sqrt(np.clip(w, 0.0, None))[:, None, :]


def run_net_batch(model: _TwoLayerGmm, states: list[NetState], delta: float, steps: int,
                  streams: list[RngStream], record_stride: int) -> list[RunOutcome]:
    K = model.K
    C = model.means.shape[0]
    comps = model.components
    n_comp = len(comps)
    comp_dir = np.array([c[0] for c in comps])
    comp_sign = np.array([c[1] for c in comps])
    comp_y = np.array([c[2] for c in comps], dtype=float)
    noiseless = np.isinf(model.lam)
    inv_sqrt_lam = 0.0 if noiseless else 1.0 / np.sqrt(model.lam)
    inv_lam = inv_sqrt_lam ** 2
    alpha = model.alpha
    shrink = 1.0 - delta * alpha
    dof = model.N - C - K
    if dof < 1 and not noiseless:
        raise ValueError("reduced engine needs N > K + number of mean directions")

    v = np.stack([s.v for s in states]).astype(float)
    M = np.stack([s.M for s in states]).astype(float)
    R = np.stack([s.R for s in states]).astype(float)
    B = v.shape[0]
    iu = np.triu_indices(K)
    eyeC = np.eye(C)

    def draw(rng, size):
        if noiseless:
            return (rng.uniform(size),)
        return rng.uniform(size), rng.normal((size, C + K)), rng.generator.chisquare(dof, size)

    noise = _BlockNoise(streams, draw)

    def snapshot():
        return np.concatenate([v, M.transpose(0, 2, 1).reshape(B, -1), R[:, iu[0], iu[1]]], axis=1)

    rec_t, rec = [0.0], [snapshot()]
    dead = np.full(B, -1)
    for step in range(1, steps + 1):
        drawn = noise.next()
        c = np.minimum((drawn[0] * n_comp).astype(int), n_comp - 1)
        y = comp_y[c]
        s = eyeC[comp_dir[c]] * comp_sign[c][:, None]  # (B, C) signed mean coordinates
        if noiseless:
            xm = s
            a = np.einsum("bkc,bc->bk", M, xm)
        else:
            z = drawn[1]
            xm = s + inv_sqrt_lam * z[:, :C]
            F = _batched_factor(R)
            bperp = inv_sqrt_lam * np.einsum("bij,bj->bi", F, z[:, C:])
            q = inv_lam * (np.einsum("bj,bj->b", z[:, C:], z[:, C:]) + drawn[2])
            a = np.einsum("bkc,bc->bk", M, xm) + bperp
        g = np.maximum(a, 0.0)
        err = sigmoid(np.einsum("bk,bk->b", v, g)) - y
        kappa = delta * v * (a >= 0) * err[:, None]
        v = v - delta * (g * err[:, None] + alpha * v)
        M = shrink * M - kappa[:, :, None] * xm[:, None, :]
        if noiseless:
            R = shrink * shrink * R
        else:
            cross = kappa[:, :, None] * bperp[:, None, :]
            R = (shrink * shrink * R - shrink * (cross + cross.transpose(0, 2, 1))
                 + q[:, None, None] * kappa[:, :, None] * kappa[:, None, :])
        bad = ~np.isfinite(v).all(axis=1)
        if bad.any() or step % 64 == 0:
            bad |= ~(np.isfinite(M).all(axis=(1, 2)) & np.isfinite(R).all(axis=(1, 2)))
            if bad.any():
                dead[bad & (dead < 0)] = step
                v[bad] = 0.0
                M[bad] = 0.0
                R[bad] = 0.0
        if step % record_stride == 0 or step == steps:
            rec_t.append(step * delta)
            rec.append(snapshot())
    return _outcomes(model.schema, rec_t, rec, dead)


def run_batch(model, states, delta, steps, streams, record_stride=1) -> list[RunOutcome]:
    if isinstance(model, TensorPcaModel):
        return run_tensor_batch(model, np.asarray(states, float).reshape(-1, 2), delta, steps,
                                streams, record_stride)
    if isinstance(model, (BgmmModel, XorGmmModel)):
        return run_net_batch(model, states, delta, steps, streams, record_stride)
    raise TypeError(f"no reduced engine for {type(model).__name__}")


def random_state(model, rng: RngStream):
    if isinstance(model, TensorPcaModel):
        return tensor_random_state(model, rng)
    return net_random_state(model, rng)


def state_from_summary(model, u: SummaryVec):
    if isinstance(model, TensorPcaModel):
        return tensor_state_from_summary(u)
    return net_state_from_summary(model, u)


def state_from_param(model, x: ParamPoint):
    if isinstance(model, TensorPcaModel):
        return tensor_state(model, x)
    return net_state(model, x)


__all__ = ["RunOutcome", "NetState", "run_batch", "random_state", "state_from_summary",
           "state_from_param", "gram_from_values", "gram_to_values"]
