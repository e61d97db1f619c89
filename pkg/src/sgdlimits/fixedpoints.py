"""Closed-form fixed points, stability labels, basin classification and XOR success probabilities.

Set-valued fixed points are stored as products of arcs. A block is a group of hidden nodes whose
(v_i, m_i) pairs equal (s_v t_i, s_m t_i) with t_i >= 0 and sum_i t_i^2 = C; every summary
coordinate not pinned by a block is zero on the set. Distances to such sets are computed in
closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy.optimize import brentq

from .core import SummaryVec
from .errors import DomainError, SchemaError
from .limits.gmm import (BGMM_COMPONENTS, BGMM_SCHEMA, XOR_COMPONENTS, c_alpha_bgmm, c_alpha_xor,
                         noiseless_field)
from .limits.tensor import BALLISTIC_SCHEMA, ballistic_field
from .models.gmm import xor_schema

STABLE, UNSTABLE = "stable", "unstable"
MINUS = "−"
STAR, DAGGER = "m_⋆", "m_†"


@dataclass(frozen=True)
class Block:
    v_index: tuple[int, ...]   # schema positions of v_i for the nodes of the block
    m_index: tuple[int, ...]   # schema positions of the paired overlap coordinate
    s_v: float
    s_m: float
    radius2: float


@dataclass(frozen=True)
class FixedPointRecord:
    """A fixed point or a product-of-arcs fixed set.

    ``coords`` is a representative point (the exact point for isolated fixed points);
    ``blocks`` is empty for isolated points.
    """

    coords: SummaryVec
    stability: str
    label: str
    blocks: tuple[Block, ...] = ()
    residual: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        if not self.blocks:
            return "point"
        return "partition-block" if len(self.blocks) > 1 or len(self.blocks[0].v_index) > 1 else "point"

    def distance(self, u: SummaryVec) -> float:
        if u.schema != self.coords.schema:
            raise SchemaError("schema mismatch between endpoint and fixed point")
        if not self.blocks:
            return float(np.linalg.norm(u.values - self.coords.values))
        x = u.values
        pinned = np.zeros(len(x), bool)
        d2 = 0.0
        for b in self.blocks:
            vi, mi = np.array(b.v_index), np.array(b.m_index)
            pinned[vi] = True
            pinned[mi] = True
            # (v, m) = t (s_v, s_m): unconstrained best t and the perpendicular remainder
            tau = 0.5 * (b.s_v * x[vi] + b.s_m * x[mi])
            perp = x[vi] ** 2 + x[mi] ** 2 - 2.0 * tau ** 2
            tp = np.clip(tau, 0.0, None)
            norm = float(np.linalg.norm(tp))
            if norm > 0:
                t = np.sqrt(b.radius2) * tp / norm
            else:
                t = np.zeros_like(tau)
                t[int(np.argmax(tau))] = np.sqrt(b.radius2)
            d2 += float(np.sum(2.0 * (t - tau) ** 2 + perp))
        d2 += float(np.sum(x[~pinned] ** 2))
        return float(np.sqrt(max(d2, 0.0)))


# --- tensor PCA ---------------------------------------------------------------------------

def tensor_pca_lambda_c(k: int, c_delta: float = 1.0) -> float:
    """Critical SNR (c/k)^{k/2} (2k-2)^{k-1} / (k-2)^{(k-2)/2}, with 0^0 = 1 at k = 2."""
    if k < 2:
        raise DomainError("k must be at least 2")
    if k == 2:
        return float(c_delta)
    return float((c_delta / k) ** (k / 2) * (2 * k - 2) ** (k - 1) / (k - 2) ** ((k - 2) / 2))


def psi(rho, k: int, lam: float, c_delta: float):
    """psi(rho) = lam^{-2/(k-2)} rho^{2(k-1)/(k-2)} - rho + c_delta; its roots above c_delta give R^2."""
    return lam ** (-2.0 / (k - 2)) * np.power(rho, 2.0 * (k - 1) / (k - 2)) - rho + c_delta


def tensor_pca_roots(k: int, lam: float, c_delta: float = 1.0) -> tuple[float, float] | None:
    """(rho_dagger, rho_star) for k >= 3, or None when psi has no root above c_delta."""
    if k < 3:
        raise DomainError("the psi equation is for k >= 3")
    p = 2.0 * (k - 1) / (k - 2)
    a = lam ** (-2.0 / (k - 2))
    # psi is convex on (0, inf); its minimizer solves a p rho^{p-1} = 1
    rho_min = (1.0 / (a * p)) ** (1.0 / (p - 1.0))
    if rho_min <= c_delta or psi(rho_min, k, lam, c_delta) >= 0:
        return None
    f = lambda r: psi(r, k, lam, c_delta)
    hi = 2.0 * rho_min
    while f(hi) <= 0:
        hi *= 2.0
    tol = dict(xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return brentq(f, c_delta, rho_min, **tol), brentq(f, rho_min, hi, **tol)


def _tensor_record(m, c_delta, stability, label, k, lam) -> FixedPointRecord:
    u = SummaryVec(BALLISTIC_SCHEMA, np.array([m, c_delta]))
    res = float(np.linalg.norm(ballistic_field(u.values, k, lam, c_delta)))
    return FixedPointRecord(u, stability, label, residual=res)


def tensor_pca_fixed_points(k: int, lam: float, c_delta: float = 1.0) -> list[FixedPointRecord]:
    if lam <= 0:
        raise DomainError("lambda must be positive")
    lam_c = tensor_pca_lambda_c(k, c_delta)
    origin = SummaryVec(BALLISTIC_SCHEMA, np.zeros(2))
    out = [FixedPointRecord(origin, UNSTABLE, "unstable:origin",
                            residual=float(np.linalg.norm(ballistic_field(origin.values, k, lam, c_delta))))]
    eq_stable = k >= 3 or lam < lam_c
    out.append(_tensor_record(0.0, c_delta, STABLE if eq_stable else UNSTABLE,
                              f"{STABLE if eq_stable else UNSTABLE}:equator", k, lam))
    if k == 2:
        if lam > c_delta:
            m = np.sqrt(lam - c_delta)
            out.append(_tensor_record(m, c_delta, STABLE, f"stable:+{STAR}", k, lam))
            out.append(_tensor_record(-m, c_delta, STABLE, f"stable:{MINUS}{STAR}", k, lam))
        return out
    roots = tensor_pca_roots(k, lam, c_delta)
    if roots is None:
        return out
    m_dag, m_star = (np.sqrt(r - c_delta) for r in roots)
    for m, stab, name in ((m_dag, UNSTABLE, DAGGER), (m_star, STABLE, STAR)):
        out.append(_tensor_record(m, c_delta, stab, f"{stab}:+{name}", k, lam))
        # m -> -m is a symmetry only for even k; for odd k the mirrored points are not fixed
        if k % 2 == 0:
            out.append(_tensor_record(-m, c_delta, stab, f"{stab}:{MINUS}{name}", k, lam))
    return out


# --- binary GMM ---------------------------------------------------------------------------

def _net_record(schema, K, C, comps, alpha, blocks, stability, label) -> FixedPointRecord:
    x = np.zeros(len(schema))
    for b in blocks:
        t = np.sqrt(b.radius2 / len(b.v_index))
        x[list(b.v_index)] = b.s_v * t
        x[list(b.m_index)] = b.s_m * t
    res = float(np.linalg.norm(noiseless_field(x, K, C, comps, alpha)))
    return FixedPointRecord(SummaryVec(schema, x), stability, label, tuple(blocks), res)


def bgmm_fixed_points(alpha: float) -> list[FixedPointRecord]:
    """Fixed points of the noiseless field (all with v = m and R = 0)."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    rec = lambda blocks, stab, label: _net_record(BGMM_SCHEMA, 2, 1, BGMM_COMPONENTS, alpha, blocks, stab, label)
    out = [rec((), STABLE if alpha > 0.25 else UNSTABLE, f"{STABLE if alpha > 0.25 else UNSTABLE}:origin")]
    if alpha >= 0.25:
        return out
    C = c_alpha_bgmm(alpha)
    for s, name in ((1.0, "(+,+)"), (-1.0, f"({MINUS},{MINUS})")):
        out.append(rec((Block((0, 1), (2, 3), s, s, C),), UNSTABLE, f"unstable:ring{name}"))
    for s, name in ((1.0, f"(+,{MINUS})"), (-1.0, f"({MINUS},+)")):
        blocks = (Block((0,), (2,), s, s, C), Block((1,), (3,), -s, -s, C))
        out.append(rec(blocks, STABLE, f"stable:{name}"))
    return out


# --- XOR GMM ------------------------------------------------------------------------------

# block codes: 0 = I_0, 1 = I_mu^+, 2 = I_mu^-, 3 = I_nu^+, 4 = I_nu^-
BLOCK_NAMES = ("I0", "mu+", "mu-", "nu+", "nu-")
# (s_v, s_m, which overlap: 0 = mu, 1 = nu)
BLOCK_SIGNS = {1: (1.0, 1.0, 0), 2: (1.0, -1.0, 0), 3: (-1.0, -1.0, 1), 4: (-1.0, 1.0, 1)}


def partition_label(assign: tuple[int, ...]) -> str:
    parts = []
    for code, name in enumerate(BLOCK_NAMES):
        members = [str(i + 1) for i, c in enumerate(assign) if c == code]
        parts.append(f"{name}={{{','.join(members)}}}")
    return " ".join(parts)


def _xor_blocks(assign, K, C) -> tuple[Block, ...]:
    blocks = []
    for code in (1, 2, 3, 4):
        nodes = [i for i, c in enumerate(assign) if c == code]
        if nodes:
            s_v, s_m, which = BLOCK_SIGNS[code]
            m_index = tuple(K + which * K + i for i in nodes)
            blocks.append(Block(tuple(nodes), m_index, s_v, s_m, C))
    return tuple(blocks)


def xor_adjacent(assign: tuple[int, ...]):
    """Assignments reachable by moving one node from a signal block to I_0 without emptying it."""
    for i, c in enumerate(assign):
        if c != 0 and sum(1 for x in assign if x == c) >= 2:
            yield assign[:i] + (0,) + assign[i + 1:]


@dataclass
class XorConnectivity:
    n_sets: int
    n_components: int
    n_stable_components: int
    components: list[list[tuple[int, ...]]]


def xor_components(K: int) -> XorConnectivity:
    """Connected components of the union of XOR fixed sets (all 5^K block assignments)."""
    assigns = list(itertools.product(range(5), repeat=K))
    index = {a: i for i, a in enumerate(assigns)}
    parent = list(range(len(assigns)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in assigns:
        for b in xor_adjacent(a):
            ra, rb = find(index[a]), find(index[b])
            if ra != rb:
                parent[ra] = rb
    groups: dict[int, list] = {}
    for a in assigns:
        groups.setdefault(find(index[a]), []).append(a)
    comps = list(groups.values())
    stable = sum(1 for g in comps if any(xor_is_stable(a) for a in g))
    return XorConnectivity(len(assigns), len(comps), stable, comps)


def xor_is_stable(assign) -> bool:
    return all(code in assign for code in (1, 2, 3, 4))


def xor_signature(u: SummaryVec, K: int, v_floor: float = 0.1) -> tuple[int, ...]:
    """Block assignment read off the signs of (v_i, m^mu_i, m^nu_i).

    Nodes with |v_i| <= v_floor go to I_0; the rest are matched to the signal block whose
    (sign v, sign m) pattern they carry, using m^mu when v_i > 0 and m^nu when v_i < 0.
    """
    vals = u.values
    v, m_mu, m_nu = vals[:K], vals[K:2 * K], vals[2 * K:3 * K]
    assign = []
    for i in range(K):
        if abs(v[i]) <= v_floor:
            assign.append(0)
            continue
        s_v = 1.0 if v[i] > 0 else -1.0
        s_m = 1.0 if (m_mu[i] if s_v > 0 else m_nu[i]) >= 0 else -1.0
        assign.append(next(c for c, (bv, bm, _) in BLOCK_SIGNS.items() if bv == s_v and bm == s_m))
    return tuple(assign)


def xor_basin_label(u: SummaryVec, K: int, v_floor: float = 0.1) -> str:
    """Stability-prefixed partition label of the fixed set whose sign pattern ``u`` carries.

    Cheap stand-in for nearest-set classification when trajectories are still drifting slowly
    along a fixed set; all four signal blocks occupied means the stable basin.
    """
    if tuple(u.schema) != xor_schema(K):
        raise SchemaError(f"expected the K={K} XOR schema")
    assign = xor_signature(u, K, v_floor)
    prefix = STABLE if xor_is_stable(assign) else UNSTABLE
    return f"{prefix}:{partition_label(assign)}"


def xor_fixed_points(alpha: float, K: int = 4, with_report: bool = False):
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if K < 4:
        raise DomainError("the XOR model needs K >= 4")
    schema = xor_schema(K)
    rec = lambda blocks, stab, label: _net_record(schema, K, 2, XOR_COMPONENTS, alpha, blocks, stab, label)
    if alpha >= 0.125:
        out = [rec((), STABLE, "stable:origin")]
        report = XorConnectivity(1, 1, 1, [[(0,) * K]])
        return (out, report) if with_report else out
    C = c_alpha_xor(alpha)
    out = []
    for assign in itertools.product(range(5), repeat=K):
        stab = STABLE if xor_is_stable(assign) else UNSTABLE
        out.append(rec(_xor_blocks(assign, K, C), stab, f"{stab}:{partition_label(assign)}"))
        out[-1].extra["assignment"] = assign
    if with_report:
        return out, xor_components(K)
    return out


def xor_success_probability(K: int) -> tuple[Fraction, float]:
    """(1/2^K) sum_{k=2}^{K-2} C(K,k)(1 - 2^{1-k})(1 - 2^{1+k-K}) as an exact rational."""
    if K < 4:
        raise DomainError("K must be at least 4")
    total = Fraction(0)
    for k in range(2, K - 1):
        total += comb(K, k) * (1 - Fraction(2) ** (1 - k)) * (1 - Fraction(2) ** (1 + k - K))
    p = total / 2 ** K
    return p, float(p)


def xor_success_by_enumeration(K: int) -> Fraction:
    """Fraction of equally likely per-node sign classes in which all four classes occur.

    A node with v > 0 only cares about sign(m^mu), one with v < 0 only about sign(m^nu), so the
    joint sign pattern of (v_i, m^mu_i, m^nu_i) reduces to four equiprobable classes per node.
    """
    if K < 4:
        raise DomainError("K must be at least 4")
    codes = np.arange(4 ** K, dtype=np.int64)
    seen = np.zeros_like(codes)
    for i in range(K):
        seen |= 1 << ((codes >> (2 * i)) & 3)
    return Fraction(int(np.count_nonzero(seen == 15)), 4 ** K)


def xor_success_by_full_enumeration(K: int) -> Fraction:
    """Same probability by enumerating all 8^K sign patterns of (v_i, m^mu_i, m^nu_i)."""
    good = 0
    for pattern in itertools.product(itertools.product((1, -1), repeat=3), repeat=K):
        classes = {(sv, sm if sv > 0 else sn) for sv, sm, sn in pattern}
        good += len(classes) == 4
    return Fraction(good, 8 ** K)


# --- classification -----------------------------------------------------------------------

def classify_endpoint(u: SummaryVec, fps: list[FixedPointRecord], eps: float = 0.05) -> str:
    best, label = np.inf, "unresolved"
    for fp in fps:
        d = fp.distance(u)
        if d < best:
            best, label = d, fp.label
    return label if best <= eps else "unresolved"
