"""Limiting dynamics for two-layer networks on the binary and XOR Gaussian mixtures.

Summary layout (both models): v (K), overlaps M (K x C) with the C mean directions, and the
upper triangle of the orthogonal Gram matrix R. Finite-lambda drifts need the Gaussian
functionals

    A_ic  = E[(X.e_c) 1{W_i.X >= 0} (sigma(v.g(WX)) - y)]
    Ap_ij = E[(X.W_j^perp) 1{W_i.X >= 0} (sigma - y)]
    B_ij  = E[1{W_i.X >= 0} 1{W_j.X >= 0} (sigma - y)^2]

which depend on the parameters only through the summary. With X = s e_d + Z/sqrt(lambda) for
mixture component (d, s, y):

    X.e_c       = s 1{c = d} + z_c / sqrt(lambda)
    X.W_j^perp  = (F z_perp)_j / sqrt(lambda),   F F^T = R
    W_i.X       = sum_c M_ic (X.e_c) + X.W_i^perp

with a single shared z_c per mean direction and K further standard normals z_perp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SummaryVec
from ..errors import DomainError, SchemaError
from ..models.base import sigmoid
from ..models.gmm import gram_from_values, gram_pairs, gram_to_values, r_name, xor_schema
from .integrators import McConfig, OdeSystem, SdeSystem, psd_sqrt

BGMM_SCHEMA = ("v1", "v2", "m1", "m2", "R11", "R12", "R22")
BGMM_COMPONENTS = ((0, 1.0, 1.0), (0, -1.0, 0.0))
XOR_COMPONENTS = ((0, 1.0, 1.0), (0, -1.0, 1.0), (1, 1.0, 0.0), (1, -1.0, 0.0))


def c_alpha_bgmm(alpha: float) -> float:
    """Squared ring radius -logit(2 alpha) = log(1 - 2 alpha) - log(2 alpha)."""
    return float(np.log1p(-2.0 * alpha) - np.log(2.0 * alpha))


def c_alpha_xor(alpha: float) -> float:
    """Squared ring radius -logit(4 alpha)."""
    return float(np.log1p(-4.0 * alpha) - np.log(4.0 * alpha))


# --- layout helpers -------------------------------------------------------------------------

def split_net(vals: np.ndarray, K: int, C: int):
    v = vals[:K]
    M = vals[K:K + K * C].reshape(C, K).T
    R = gram_from_values(vals[K + K * C:], K)
    return v, M, R


def join_net(v, M, R) -> np.ndarray:
    return np.concatenate([v, np.asarray(M).T.ravel(), gram_to_values(R)])


def _check_psd(R: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    w, U = np.linalg.eigh(0.5 * (R + R.T))
    scale = max(1.0, float(np.abs(R).max()))
    if w.min() < -tol * scale:
        raise DomainError(f"orthogonal Gram matrix is not PSD (smallest eigenvalue {w.min():.3e})")
    return U * np.sqrt(np.clip(w, 0.0, None))


def _net_dims(schema_len: int, C: int) -> int:
    # schema_len = K + C K + K(K+1)/2
    for K in range(1, 64):
        if K + C * K + K * (K + 1) // 2 == schema_len:
            return K
    raise SchemaError(f"no width K matches {schema_len} coordinates")


# --- Gaussian functionals -------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianFunctionals:
    A: np.ndarray        # (K, C)
    A_perp: np.ndarray   # (K, K)
    B: np.ndarray        # (K, K)
    se_A: np.ndarray
    se_A_perp: np.ndarray
    se_B: np.ndarray

    @property
    def A_mu(self) -> np.ndarray:
        return self.A[:, 0]

    @property
    def A_nu(self) -> np.ndarray:
        return self.A[:, 1]


def _mean_se(units: np.ndarray):
    P = units.shape[0]
    mean = units.mean(axis=0)
    se = units.std(axis=0, ddof=1) / np.sqrt(P) if P > 1 else np.zeros_like(mean)
    return mean, se


def network_expectations(vals: np.ndarray, K: int, C: int, components, lam: float,
                         mc: McConfig) -> GaussianFunctionals:
    v, M, R = split_net(np.asarray(vals, float), K, C)
    F = _check_psd(R)
    inv = 0.0 if np.isinf(lam) else 1.0 / np.sqrt(lam)
    z = mc.normals(C + K)
    P = z.shape[0]
    Z = np.concatenate([z, -z], axis=0)
    zc, zp = Z[:, :C], Z[:, C:]
    bperp = inv * zp @ F.T  # (2P, K)
    A = np.zeros((2 * P, K, C))
    Ap = np.zeros((2 * P, K, K))
    B = np.zeros((2 * P, K, K))
    for d, s, y in components:
        xm = inv * zc
        xm[:, d] += s
        a = xm @ M.T + bperp
        ind = (a >= 0).astype(float)
        err = sigmoid(np.maximum(a, 0.0) @ v) - y
        w = ind * err[:, None]
        A += w[:, :, None] * xm[:, None, :]
        Ap += w[:, :, None] * bperp[:, None, :]
        B += ind[:, :, None] * ind[:, None, :] * (err * err)[:, None, None]
    n = len(components)
    # one i.i.d. unit per antithetic pair, averaged over the mixture components
    unit = lambda X: 0.5 * (X[:P] + X[P:]) / n
    mA, sA = _mean_se(unit(A))
    mAp, sAp = _mean_se(unit(Ap))
    mB, sB = _mean_se(unit(B))
    return GaussianFunctionals(mA, mAp, mB, sA, sAp, sB)


def bgmm_gaussian_expectations(u: SummaryVec, lam: float, mc: McConfig) -> GaussianFunctionals:
    if u.schema != BGMM_SCHEMA:
        raise SchemaError(f"expected schema {BGMM_SCHEMA}, got {u.schema}")
    return network_expectations(u.values, 2, 1, BGMM_COMPONENTS, lam, mc)


def xor_gaussian_expectations(u: SummaryVec, lam: float, mc: McConfig, K: int) -> GaussianFunctionals:
    if u.schema != xor_schema(K):
        raise SchemaError("schema does not match the XOR layout for this K")
    return network_expectations(u.values, K, 2, XOR_COMPONENTS, lam, mc)


def network_field(vals: np.ndarray, K: int, C: int, components, lam: float, alpha: float,
                  c_delta: float, mc: McConfig, with_se: bool = False, corrector_scale: float = 1.0):
    """h = -f + g with

    f_{v_i}  = sum_c M_ic A_ic + Ap_ii + alpha v_i
    f_{M_ic} = v_i A_ic + alpha M_ic
    f_{R_ij} = v_i Ap_ij + v_j Ap_ji + 2 alpha R_ij
    g_{R_ij} = c_delta v_i v_j B_ij / lambda   (g vanishes on v and M)
    """
    v, M, R = split_net(np.asarray(vals, float), K, C)
    G = network_expectations(vals, K, C, components, lam, mc)
    f_v = (M * G.A).sum(axis=1) + np.diag(G.A_perp) + alpha * v
    f_M = v[:, None] * G.A + alpha * M
    f_R = v[:, None] * G.A_perp + (v[:, None] * G.A_perp).T + 2.0 * alpha * R
    g_R = np.zeros((K, K)) if np.isinf(lam) else corrector_scale * c_delta * np.outer(v, v) * G.B / lam
    h = join_net(-f_v, -f_M, -f_R + g_R)
    if not with_se:
        return h
    se_v = np.sqrt(((M * G.se_A) ** 2).sum(axis=1) + np.diag(G.se_A_perp) ** 2)
    se_M = np.abs(v)[:, None] * G.se_A
    se_Rf = np.sqrt((v[:, None] * G.se_A_perp) ** 2 + ((v[:, None] * G.se_A_perp) ** 2).T)
    se_g = np.zeros((K, K)) if np.isinf(lam) else c_delta * np.abs(np.outer(v, v)) * G.se_B / lam
    se = join_net(se_v, se_M, np.sqrt(se_Rf ** 2 + se_g ** 2))
    return h, se


def bgmm_ballistic_rhs(u: SummaryVec, lam: float, alpha: float, c_delta: float, mc: McConfig,
                       with_se: bool = False):
    if u.schema != BGMM_SCHEMA:
        raise SchemaError(f"expected schema {BGMM_SCHEMA}, got {u.schema}")
    out = network_field(u.values, 2, 1, BGMM_COMPONENTS, lam, alpha, c_delta, mc, with_se)
    if with_se:
        return SummaryVec(BGMM_SCHEMA, out[0]), SummaryVec(BGMM_SCHEMA, out[1])
    return SummaryVec(BGMM_SCHEMA, out)


def xor_ballistic_rhs(u: SummaryVec, lam: float, alpha: float, c_delta: float, mc: McConfig, K: int,
                      with_se: bool = False):
    schema = xor_schema(K)
    if u.schema != schema:
        raise SchemaError("schema does not match the XOR layout for this K")
    out = network_field(u.values, K, 2, XOR_COMPONENTS, lam, alpha, c_delta, mc, with_se)
    if with_se:
        return SummaryVec(schema, out[0]), SummaryVec(schema, out[1])
    return SummaryVec(schema, out)


# --- lambda = infinity fields ---------------------------------------------------------------

def noiseless_field(vals: np.ndarray, K: int, C: int, components, alpha: float,
                    tags: np.ndarray | None = None) -> np.ndarray:
    """Noiseless (lambda = infinity) field.

    Each component (d, s, y) contributes, with a = s M[:, d],
        A[:, d] += s 1{a > 0} (sigma(v.g(a)) - y) / #components.
    Coordinates with M_id = 0 exactly count as positive, negative or neither according to
    ``tags[i, d]`` in {+1, -1, 0}; tag 0 (the default) leaves a zero overlap inactive on both
    sides, so it does not contribute.
    Then dv/dt = -sum_c M_c A_c - alpha v, dM/dt = -v A - alpha M, dR/dt = -2 alpha R.
    """
    v, M, R = split_net(np.asarray(vals, float), K, C)
    tags = np.zeros((K, C)) if tags is None else np.asarray(tags, float).reshape(K, C)
    A = np.zeros((K, C))
    for d, s, y in components:
        a = s * M[:, d]
        pos = (a > 0) | ((a == 0) & (s * tags[:, d] > 0))
        err = float(sigmoid(v @ np.maximum(a, 0.0))) - y
        A[:, d] += s * pos * err / len(components)
    dv = -(M * A).sum(axis=1) - alpha * v
    dM = -v[:, None] * A - alpha * M
    return join_net(dv, dM, -2.0 * alpha * R)


def bgmm_ballistic_rhs_noiseless(u: SummaryVec, alpha: float, tags=None) -> SummaryVec:
    if u.schema != BGMM_SCHEMA:
        raise SchemaError(f"expected schema {BGMM_SCHEMA}, got {u.schema}")
    return SummaryVec(BGMM_SCHEMA, noiseless_field(u.values, 2, 1, BGMM_COMPONENTS, alpha, tags))


def xor_ballistic_rhs_noiseless(u: SummaryVec, alpha: float, K: int, tags=None) -> SummaryVec:
    schema = xor_schema(K)
    if u.schema != schema:
        raise SchemaError("schema does not match the XOR layout for this K")
    return SummaryVec(schema, noiseless_field(u.values, K, 2, XOR_COMPONENTS, alpha, tags))


def bgmm_system(lam: float, alpha: float, c_delta: float = 1.0, mc: McConfig | None = None) -> OdeSystem:
    if np.isinf(lam):
        return OdeSystem(BGMM_SCHEMA, lambda x: noiseless_field(x, 2, 1, BGMM_COMPONENTS, alpha),
                         "bgmm-noiseless")
    mc = mc or McConfig()
    return OdeSystem(BGMM_SCHEMA,
                     lambda x: network_field(x, 2, 1, BGMM_COMPONENTS, lam, alpha, c_delta, mc),
                     "bgmm-ballistic")


def bgmm_noiseless_system(alpha: float, tags=None) -> OdeSystem:
    return OdeSystem(BGMM_SCHEMA, lambda x: noiseless_field(x, 2, 1, BGMM_COMPONENTS, alpha, tags),
                     "bgmm-noiseless")


def xor_system(K: int, lam: float, alpha: float, c_delta: float = 1.0, mc: McConfig | None = None) -> OdeSystem:
    schema = xor_schema(K)
    if np.isinf(lam):
        return OdeSystem(schema, lambda x: noiseless_field(x, K, 2, XOR_COMPONENTS, alpha), "xor-noiseless")
    mc = mc or McConfig()
    return OdeSystem(schema,
                     lambda x: network_field(x, K, 2, XOR_COMPONENTS, lam, alpha, c_delta, mc),
                     "xor-ballistic")


def xor_noiseless_system(K: int, alpha: float, tags=None) -> OdeSystem:
    return OdeSystem(xor_schema(K), lambda x: noiseless_field(x, K, 2, XOR_COMPONENTS, alpha, tags),
                     "xor-noiseless")


# --- diffusive limits near the quarter rings ------------------------------------------------

BGMM_DIFFUSIVE_SCHEMA = ("vt1", "vt2", "mt1", "mt2", "R11", "R12", "R22")
XOR_DIFFUSIVE_SCHEMA = (("vt1", "vt2", "vt3", "vt4", "mtmu1", "mtmu2", "mtnu3", "mtnu4")
                        + tuple(r_name(i + 1, j + 1, 4) for i, j in gram_pairs(4)))


def _on_ring(a: np.ndarray, C: float, tol: float = 1e-8) -> bool:
    return abs(float(a @ a) - C) <= tol


def _block_drift(vt, mt, a, alpha, gain, sign):
    s = float(a @ (vt + mt)) if vt.ndim == 1 else (vt + mt) @ a
    coupling = sign * gain * (np.outer(s, a) if np.ndim(s) else s * a)
    return alpha * (mt - vt) + coupling, alpha * (vt - mt) + coupling


def bgmm_diffusive(a, alpha: float, literal_coupling: bool = False) -> SdeSystem:
    """Rescaled fluctuations (v~, m~) = sqrt(N)((v, m) - (a, a)) about a quarter-ring point.

    dv~_i = alpha(m~_i - v~_i) - a_i(alpha - 2 alpha^2) sum_k a_k(v~_k + m~_k), m~ the twin with
    v~ and m~ swapped, dR = -2 alpha R, and constant rank-1 Sigma~ = alpha^2 w w^T with
    w = (a, a). The coupling sign is the one obtained by linearizing the noiseless ballistic
    field at the ring; ``literal_coupling=True`` flips it.
    """
    a = np.asarray(a, float).reshape(2)
    if not 0 < alpha < 0.25:
        raise DomainError("the quarter ring exists only for 0 < alpha < 1/4")
    C = c_alpha_bgmm(alpha)
    if np.any(a < 0) or not _on_ring(a, C):
        raise DomainError(f"a must satisfy a_i >= 0 and a_1^2 + a_2^2 = C_alpha = {C:.12g}")
    gain = alpha - 2.0 * alpha * alpha
    sign = 1.0 if literal_coupling else -1.0
    w = np.concatenate([a, a, np.zeros(3)])
    Sigma = alpha * alpha * np.outer(w, w)
    F0 = psd_sqrt(Sigma)

    def drift(x):
        x = np.asarray(x, float)
        vt, mt, R = x[..., 0:2], x[..., 2:4], x[..., 4:]
        dv, dm = _block_drift(vt, mt, a, alpha, gain, sign)
        return np.concatenate([dv, dm, -2.0 * alpha * R], axis=-1)

    return SdeSystem(BGMM_DIFFUSIVE_SCHEMA, drift, lambda x: F0, 7, "bgmm-diffusive", constant_factor=True)


def xor_diffusive(a_mu, a_nu, alpha: float, literal_coupling: bool = False) -> SdeSystem:
    """Rescaled fluctuations about the product of rings with nodes {1,2} on mu and {3,4} on nu.

    Coordinates v~_i = sqrt(N)(v_i - a_i) (a = (a_mu, a_nu)), m~mu_i = sqrt(N)(m^mu_i - a_i) for
    i = 1, 2 and m~nu_i = sqrt(N)(m^nu_i - a_i) for i = 3, 4. Each block follows the bGMM-type
    drift with gain alpha - 4 alpha^2; Sigma~ = alpha^2 (3 w_mu w_mu^T + 3 w_nu w_nu^T
    - w_mu w_nu^T - w_nu w_mu^T), which has rank 2.
    """
    a_mu = np.asarray(a_mu, float).reshape(2)
    a_nu = np.asarray(a_nu, float).reshape(2)
    if not 0 < alpha < 0.125:
        raise DomainError("the XOR rings exist only for 0 < alpha < 1/8")
    C = c_alpha_xor(alpha)
    if not (_on_ring(a_mu, C) and _on_ring(a_nu, C)):
        raise DomainError(f"a_mu and a_nu must each lie on the ring of squared radius {C:.12g}")
    gain = alpha - 4.0 * alpha * alpha
    sign = 1.0 if literal_coupling else -1.0
    d = len(XOR_DIFFUSIVE_SCHEMA)
    w_mu = np.zeros(d)
    w_nu = np.zeros(d)
    w_mu[[0, 1, 4, 5]] = np.concatenate([a_mu, a_mu])
    w_nu[[2, 3, 6, 7]] = np.concatenate([a_nu, a_nu])
    Sigma = alpha * alpha * (3.0 * np.outer(w_mu, w_mu) + 3.0 * np.outer(w_nu, w_nu)
                             - np.outer(w_mu, w_nu) - np.outer(w_nu, w_mu))
    F0 = psd_sqrt(Sigma)

    def drift(x):
        x = np.asarray(x, float)
        v_mu, v_nu = x[..., 0:2], x[..., 2:4]
        m_mu, m_nu = x[..., 4:6], x[..., 6:8]
        dv1, dm1 = _block_drift(v_mu, m_mu, a_mu, alpha, gain, sign)
        dv2, dm2 = _block_drift(v_nu, m_nu, a_nu, alpha, gain, sign)
        return np.concatenate([dv1, dv2, dm1, dm2, -2.0 * alpha * x[..., 8:]], axis=-1)

    return SdeSystem(XOR_DIFFUSIVE_SCHEMA, drift, lambda x: F0, d, "xor-diffusive", constant_factor=True)
