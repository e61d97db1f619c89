"""Ensembles of SGD runs, one-step drift/covariance estimates, AR(1) fits, limit comparisons, export."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .core import FLOAT_FMT, RngStream, SummaryVec, Trajectory, make_rng, stack_mean, sup_distance, trajectory_to_csv
from .errors import ConfigError, DegenerateFitError, DivergenceError, DomainError, SchemaError
from .fixedpoints import (FixedPointRecord, bgmm_fixed_points, classify_endpoint, tensor_pca_fixed_points,
                          xor_basin_label, xor_fixed_points)
from .limits.integrators import OdeSystem, rk4_integrate
from .models import reduced
from .models.base import ParamPoint, sgd_run
from .models.gmm import BgmmModel, XorGmmModel
from .models.tensor_pca import TensorPcaModel

DEFAULT_EPS = 0.05
BATCH_SIZE = 100
SIGNATURE_V_FLOOR = 0.1


# --- configuration ------------------------------------------------------------------------

@dataclass
class ModelConfig:
    family: str
    n: int | None = None       # tensor PCA dimension
    N: int | None = None       # network data dimension
    k: int | None = None       # tensor order
    K: int | None = None       # XOR width
    lam: float = 1.0
    alpha: float = 0.0
    delta_mode: str = "c_over_n"
    c_delta: float = 1.0

    KEYS = ("family", "n", "N", "k", "K", "lambda", "alpha", "delta_mode", "c_delta")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        for key in d:
            if key not in cls.KEYS:
                raise ConfigError(f"unknown model key {key!r}")
        if "family" not in d:
            raise ConfigError("model block needs 'family'")
        kw = {k: v for k, v in d.items() if k != "lambda"}
        if "lambda" in d:
            kw["lam"] = float(d["lambda"]) if not isinstance(d["lambda"], str) else float(d["lambda"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        out = {"family": self.family}
        for key in ("n", "N", "k", "K"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        out.update({"lambda": self.lam, "alpha": self.alpha, "delta_mode": self.delta_mode,
                    "c_delta": self.c_delta})
        return out

    def validate(self) -> None:
        if self.family not in ("tensor", "bgmm", "xor"):
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.delta_mode != "c_over_n":
            raise ConfigError(f"unknown delta_mode {self.delta_mode!r}")
        if self.c_delta <= 0:
            raise ConfigError("c_delta must be positive")
        if self.family == "tensor" and (self.n is None or self.k is None):
            raise ConfigError("tensor model needs 'n' and 'k'")
        if self.family in ("bgmm", "xor") and self.N is None:
            raise ConfigError(f"{self.family} model needs 'N'")
        if self.family == "xor" and self.K is None:
            self.K = 4

    @property
    def dim(self) -> int:
        return self.n if self.family == "tensor" else self.N

    @property
    def delta(self) -> float:
        return self.c_delta / self.dim

    def build(self):
        try:
            if self.family == "tensor":
                return TensorPcaModel(self.n, self.k, self.lam, self.alpha)
            if self.family == "bgmm":
                return BgmmModel(N=self.N, lam=self.lam, alpha=self.alpha)
            return XorGmmModel(N=self.N, K=self.K, lam=self.lam, alpha=self.alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class ExperimentConfig:
    model: ModelConfig
    steps: int
    runs: int = 1
    master_seed: int = 0
    init: dict[str, Any] = field(default_factory=lambda: {"kind": "random"})
    record_stride: int = 1
    engine: str = "reduced"
    eps: float = DEFAULT_EPS
    name: str = "experiment"
    compare: dict[str, Any] | None = None
    classify: str = "auto"

    KEYS = ("model", "steps", "runs", "master_seed", "init", "record_stride", "engine", "eps",
            "name", "compare", "classify")

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be at least 1")
        if self.engine not in ("reduced", "dense"):
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.classify not in ("auto", "nearest", "signature"):
            raise ConfigError(f"unknown classify mode {self.classify!r}")
        if self.classify == "signature" and self.model.family != "xor":
            raise ConfigError("signature classification is only defined for the xor family")
        kind = self.init.get("kind", "random")
        if kind not in ("random", "warm"):
            raise ConfigError(f"unknown init kind {kind!r}")
        for key in self.init:
            if key not in ("kind", "target"):
                raise ConfigError(f"unknown init key {key!r}")
        if kind == "warm" and "target" not in self.init:
            raise ConfigError("warm init needs a 'target' summary")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        for key in d:
            if key not in cls.KEYS:
                raise ConfigError(f"unknown experiment key {key!r}")
        if "model" not in d or "steps" not in d:
            raise ConfigError("experiment needs 'model' and 'steps'")
        kw = dict(d)
        kw["model"] = ModelConfig.from_dict(d["model"])
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.KEYS if k != "model"}
        out["model"] = self.model.to_dict()
        return out

    @property
    def delta(self) -> float:
        return self.model.delta


# --- results ------------------------------------------------------------------------------

@dataclass
class EnsembleResult:
    config: ExperimentConfig
    schema: tuple[str, ...]
    endpoints: list[SummaryVec | None]
    labels: list[str]
    diverged_steps: list[int | None]
    trajectories: list[Trajectory | None]
    initial: list[SummaryVec]

    @property
    def runs(self) -> int:
        return len(self.labels)

    @property
    def n_diverged(self) -> int:
        return sum(1 for s in self.diverged_steps if s is not None)

    def fractions(self) -> dict[str, dict[str, float]]:
        """Label fractions among non-diverged runs with binomial standard errors."""
        n = self.runs - self.n_diverged
        counts: dict[str, int] = {}
        for lab, dv in zip(self.labels, self.diverged_steps):
            if dv is None:
                counts[lab] = counts.get(lab, 0) + 1
        out = {}
        for lab in sorted(counts):
            p = counts[lab] / n
            out[lab] = {"count": counts[lab], "fraction": p, "se": math.sqrt(p * (1 - p) / n)}
        return out

    def endpoint_array(self) -> np.ndarray:
        return np.array([e.values for e in self.endpoints if e is not None])

    def stable_fraction(self) -> dict[str, float]:
        """Pooled fraction of non-diverged runs whose label starts with "stable"."""
        return self._indicator(lambda lab, u: lab.startswith("stable"))

    def indicators(self) -> dict[str, dict[str, float]]:
        """Family-specific endpoint events reported next to the label fractions."""
        out = {"stable": self.stable_fraction()}
        if self.config.model.family == "bgmm":
            out["m1*m2<0"] = self._indicator(lambda lab, u: u["m1"] * u["m2"] < 0)
        return out

    def _indicator(self, pred) -> dict[str, float]:
        kept = [(lab, u) for lab, u in zip(self.labels, self.endpoints) if u is not None]
        n = len(kept)
        hits = sum(1 for lab, u in kept if pred(lab, u))
        p = hits / n if n else float("nan")
        return {"count": hits, "fraction": p, "se": math.sqrt(p * (1 - p) / n) if n else float("nan")}


def ballistic_spec(model_cfg: ModelConfig, mc_samples: int = 100_000) -> tuple[str, dict[str, Any]]:
    """Name and parameters of the ballistic limit matching a model block."""
    m = model_cfg
    if m.family == "tensor":
        return "tensor-ballistic", {"k": m.k, "lambda": m.lam, "c_delta": m.c_delta, "alpha": m.alpha}
    base = {"lambda": m.lam, "alpha": m.alpha, "c_delta": m.c_delta, "mc_samples": mc_samples}
    if m.family == "bgmm":
        return "bgmm-ballistic", base
    return "xor-ballistic", {"K": m.K, **base}


def fixed_points_for(model_cfg: ModelConfig) -> list[FixedPointRecord]:
    if model_cfg.family == "tensor":
        return tensor_pca_fixed_points(model_cfg.k, model_cfg.lam, model_cfg.c_delta)
    if model_cfg.family == "bgmm":
        return bgmm_fixed_points(model_cfg.alpha)
    return xor_fixed_points(model_cfg.alpha, model_cfg.K)


def fixed_point_by_label(model_cfg: ModelConfig, label: str) -> FixedPointRecord:
    """Look up a fixed point by label; ASCII '-' matches the typographic minus."""
    norm = lambda s: s.replace("\u2212", "-")
    fps = fixed_points_for(model_cfg)
    for fp in fps:
        if norm(fp.label) == norm(label):
            return fp
    raise ConfigError(f"no fixed point labelled {label!r}; available: {', '.join(fp.label for fp in fps)}")


def warm_target(cfg: ExperimentConfig, schema) -> SummaryVec:
    """Warm-start summary: an explicit {name: value} table or a fixed-point label."""
    target = cfg.init["target"]
    if isinstance(target, str):
        return fixed_point_by_label(cfg.model, target).coords
    extra = [k for k in target if k not in schema]
    if extra:
        raise ConfigError(f"unknown warm-start coordinate {extra[0]!r}")
    try:
        return SummaryVec.from_dict(schema, target)
    except SchemaError as exc:
        raise ConfigError(str(exc)) from exc


def _initial(model, cfg: ExperimentConfig, rng: RngStream, dense: bool):
    if cfg.init.get("kind", "random") == "warm":
        target = warm_target(cfg, model.schema)
        if dense:
            return model.warm_start(target, rng)
        return reduced.state_from_summary(model, target)
    if dense:
        return model.init_random(rng)
    return reduced.random_state(model, rng)


def _state_summary(model, state) -> SummaryVec:
    if isinstance(state, ParamPoint):
        return model.summary(state)
    if isinstance(model, TensorPcaModel):
        return SummaryVec(model.schema, np.array([state[0], state[1] ** 2]))
    from .limits.gmm import join_net
    return SummaryVec(model.schema, join_net(state.v, state.M, state.R))


def _run_batch(model, cfg: ExperimentConfig, run_ids: Sequence[int]):
    streams = [make_rng(cfg.master_seed, r) for r in run_ids]
    dense = cfg.engine == "dense"
    inits = [_initial(model, cfg, s.child(0), dense) for s in streams]
    summaries = [_state_summary(model, x) for x in inits]
    if dense:
        outs = []
        for x0, s in zip(inits, streams):
            try:
                tr = sgd_run(model, x0, cfg.delta, cfg.steps, s.child(1), cfg.record_stride)
                outs.append(reduced.RunOutcome(tr, tr.final()))
            except DivergenceError as exc:
                outs.append(reduced.RunOutcome(None, None, exc.step))
        return summaries, outs
    if cfg.steps == 0:
        outs = [reduced.RunOutcome(Trajectory(model.schema, [0.0], u.values[None]), u) for u in summaries]
        return summaries, outs
    outs = reduced.run_batch(model, inits, cfg.delta, cfg.steps, [s.child(1) for s in streams],
                             cfg.record_stride)
    return summaries, outs


def default_classifier(cfg: ExperimentConfig,
                       fixed_points: list[FixedPointRecord] | None = None) -> Callable[[SummaryVec], str]:
    """Nearest fixed set within eps; XOR under "auto" uses the sign signature instead.

    XOR runs spend a long time creeping along fixed sets before settling, so distance-based
    labels at a finite horizon are mostly "unresolved" while the sign pattern is already set.
    """
    mode = cfg.classify
    if mode == "auto":
        mode = "signature" if cfg.model.family == "xor" and fixed_points is None else "nearest"
    if mode == "signature":
        K = cfg.model.K
        return lambda u: xor_basin_label(u, K, SIGNATURE_V_FLOOR)
    fps = fixed_points if fixed_points is not None else fixed_points_for(cfg.model)
    return lambda u: classify_endpoint(u, fps, cfg.eps)


def run_ensemble(cfg: ExperimentConfig, threads: int = 1, keep_trajectories: bool = True,
                 fixed_points: list[FixedPointRecord] | None = None,
                 classifier: Callable[[SummaryVec], str] | None = None) -> EnsembleResult:
    """Independent SGD runs with streams (master_seed, run_index).

    Runs are grouped into fixed batches of consecutive indices; the batch layout does not depend
    on ``threads``, so results are bit-identical for any thread count.
    """
    model = cfg.model.build()
    batches = [list(range(i, min(i + BATCH_SIZE, cfg.runs))) for i in range(0, cfg.runs, BATCH_SIZE)]
    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: _run_batch(model, cfg, b), batches))
    else:
        results = [_run_batch(model, cfg, b) for b in batches]
    initial, outs = [], []
    for summ, o in results:
        initial.extend(summ)
        outs.extend(o)
    if classifier is None:
        classifier = default_classifier(cfg, fixed_points)
    labels = ["diverged" if o.endpoint is None else classifier(o.endpoint) for o in outs]
    return EnsembleResult(cfg, model.schema, [o.endpoint for o in outs], labels,
                          [o.diverged_step for o in outs],
                          [o.trajectory if keep_trajectories else None for o in outs], initial)


# --- one-step oracle ----------------------------------------------------------------------

@dataclass
class DriftEstimate:
    point: SummaryVec
    names: tuple[str, ...]
    mean: np.ndarray      # E[du] / delta
    cov: np.ndarray       # Cov(du) / delta
    se_mean: np.ndarray
    se_cov: np.ndarray
    samples: int


def _batch_steps(model, xv: np.ndarray, delta: float, count: int, rng: RngStream) -> np.ndarray:
    """count independent one-step updates x - delta grad L(x, Y) (rows)."""
    if isinstance(model, TensorPcaModel) and model.noise == "lazy":
        k = model.k
        R2 = float(xv @ xv)
        a = np.sqrt(k) * R2 ** ((k - 1) / 2)
        b = np.sqrt(k * (k - 1)) * (R2 ** ((k - 2) / 2) if k > 2 else 1.0)
        m = float(xv @ model.spike)
        det = -2.0 * model.lam * k * m ** (k - 1) * model.spike + (2.0 * k * R2 ** (k - 1) + model.alpha) * xv
        xi = rng.normal((count, model.n))
        zeta = rng.normal(count)
        G = a * xi + b * zeta[:, None] * xv[None, :]
        return xv[None, :] - delta * (det[None, :] - 2.0 * G)
    if isinstance(model, (BgmmModel, XorGmmModel)):
        K, N = model.K, model.N
        v, W = xv[:K], xv[K:].reshape(K, N)
        comp = np.minimum((rng.uniform(count) * len(model.components)).astype(int), len(model.components) - 1)
        dirs = np.array([c[0] for c in model.components])[comp]
        signs = np.array([c[1] for c in model.components])[comp]
        y = np.array([c[2] for c in model.components], float)[comp]
        X = signs[:, None] * model.means[dirs]
        if model.noise_scale > 0:
            X = X + model.noise_scale * rng.normal((count, N))
        a = X @ W.T
        g = np.maximum(a, 0.0)
        err = 0.5 * (1.0 + np.tanh(0.5 * (g @ v))) - y
        gv = g * err[:, None] + model.alpha * v
        coef = v[None, :] * (a >= 0) * err[:, None]
        out = np.empty((count, K + K * N))
        out[:, :K] = v - delta * gv
        out[:, K:] = (W[None] * (1.0 - delta * model.alpha) - delta * coef[:, :, None] * X[:, None, :]).reshape(count, -1)
        return out
    rows = []
    for _ in range(count):
        d = model.sample_datum(rng)
        rows.append(xv - delta * model.grad_loss(ParamPoint(model.family, xv), d))
    return np.array(rows)


def _summary_rows(model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, TensorPcaModel):
        m = X @ model.spike
        r2 = np.einsum("ij,ij->i", X, X) - m * m
        return np.stack([m, r2], axis=1)
    if isinstance(model, (BgmmModel, XorGmmModel)):
        K, N = model.K, model.N
        v = X[:, :K]
        W = X[:, K:].reshape(-1, K, N)
        ov = W @ model.means.T                      # (B, K, C)
        Wp = W - ov @ model.means
        R = Wp @ Wp.transpose(0, 2, 1)
        iu = np.triu_indices(K)
        return np.concatenate([v, ov.transpose(0, 2, 1).reshape(len(X), -1), R[:, iu[0], iu[1]]], axis=1)
    return np.array([model.summary(ParamPoint(model.family, x)).values for x in X])


def estimate_one_step(model, x: ParamPoint, delta: float, M: int, rng: RngStream,
                      transform: Callable[[np.ndarray], np.ndarray] | None = None,
                      names: Sequence[str] | None = None, chunk: int = 5000) -> DriftEstimate:
    """Mean and covariance of du = phi(x - delta grad L(x, Y)) - phi(x) over M fresh data.

    ``phi`` is the model summary, optionally followed by ``transform`` (applied row-wise to the
    summary values, e.g. to rescale m to sqrt(n) m). Reports E[du]/delta and Cov(du)/delta.
    """
    if M < 100:
        raise DomainError("estimate_one_step needs M >= 100")
    phi = (lambda U: U) if transform is None else transform
    xv = np.asarray(x.vector, float)
    base = phi(_summary_rows(model, xv[None, :]))[0]
    dus = []
    done = 0
    while done < M:
        c = min(chunk, M - done)
        dus.append(phi(_summary_rows(model, _batch_steps(model, xv, delta, c, rng))) - base[None, :])
        done += c
    du = np.concatenate(dus, axis=0)
    mean = du.mean(axis=0)
    centered = du - mean
    cov = centered.T @ centered / (M - 1)
    cov = 0.5 * (cov + cov.T)
    se_mean = du.std(axis=0, ddof=1) / np.sqrt(M)
    prods = centered[:, :, None] * centered[:, None, :]
    se_cov = prods.std(axis=0, ddof=1) / np.sqrt(M)
    u = model.summary(x)
    names = tuple(names) if names is not None else (u.schema if transform is None else
                                                    tuple(f"c{i}" for i in range(len(base))))
    return DriftEstimate(u, names, mean / delta, cov / delta, se_mean / delta, se_cov / delta, M)


# --- AR(1) --------------------------------------------------------------------------------

@dataclass(frozen=True)
class Ar1Fit:
    rho: float
    drift: float           # (rho - 1) / delta
    innovation_var: float
    volatility: float      # sqrt(innovation_var / delta)
    se_rho: float
    se_drift: float
    n: int


def fit_ar1(series: Sequence[float], delta: float) -> Ar1Fit:
    """OLS fit of x_{l+1} = rho x_l + e_l (no intercept: the OU processes here are centred)."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.shape[0] < 100:
        raise DomainError("fit_ar1 needs a one-dimensional series of length >= 100")
    if delta <= 0:
        raise DomainError("delta must be positive")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    if np.ptp(x) == 0:
        raise DegenerateFitError("constant series: the AR(1) coefficient is not identifiable")
    x0, x1 = x[:-1], x[1:]
    sxx = float(x0 @ x0)
    if sxx == 0:
        raise DegenerateFitError("regressor is identically zero")
    rho = float(x0 @ x1) / sxx
    resid = x1 - rho * x0
    var = float(resid @ resid) / (len(x0) - 1)
    se_rho = math.sqrt(var / sxx)
    return Ar1Fit(rho, (rho - 1.0) / delta, var, math.sqrt(var / delta), se_rho, se_rho / delta, len(x))


# --- comparison with limits ---------------------------------------------------------------

@dataclass
class ComparisonReport:
    match_mode: str
    window: tuple[float, float]
    per_run: list[float]
    mean_distance: float
    limit: Trajectory
    mean_trajectory: Trajectory

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("run,sup_distance\n")
        for i, d in enumerate(self.per_run):
            buf.write(f"{i},{FLOAT_FMT % d}\n")
        buf.write(f"mean,{FLOAT_FMT % self.mean_distance}\n")
        return buf.getvalue()


def compare_to_limit(trajs: Trajectory | Sequence[Trajectory], sys: OdeSystem, match_mode: str = "mean",
                     window: tuple[float, float] | None = None, h: float = 1e-3,
                     grid: int = 1000) -> ComparisonReport:
    """Sup-norm distances between SGD summary trajectories and the ODE solution.

    ``mean``: one ODE from the ensemble-mean initial summary; per-run distances are to that ODE.
    ``per-run``: one ODE per run from its own initial summary. Both report the distance between
    the ensemble-mean trajectory and the ODE started at the mean initial summary.
    """
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    trajs = list(trajs)
    if match_mode not in ("mean", "per-run"):
        raise ConfigError(f"unknown match_mode {match_mode!r}")
    for tr in trajs:
        if tr.schema != sys.schema:
            raise SchemaError(f"trajectory schema {tr.schema} does not match system schema {sys.schema}")
    T = min(tr.t_end for tr in trajs)
    window = window or (0.0, T)
    mean_tr = stack_mean(trajs) if len(trajs) > 1 else trajs[0]
    ode = rk4_integrate(sys, mean_tr.point(0), window[1], h)
    if match_mode == "mean":
        per_run = [sup_distance(tr, ode, window, grid) for tr in trajs]
    else:
        per_run = [sup_distance(tr, rk4_integrate(sys, tr.point(0), window[1], h), window, grid) for tr in trajs]
    return ComparisonReport(match_mode, tuple(window), per_run, sup_distance(mean_tr, ode, window, grid),
                            ode, mean_tr)


# --- export -------------------------------------------------------------------------------

def _fmt(x) -> str:
    return FLOAT_FMT % x


def runs_csv(result: EnsembleResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "master_seed", "stream_index", "label", "diverged_step"]
               + [f"init_{c}" for c in result.schema] + list(result.schema))
    for i in range(result.runs):
        end = result.endpoints[i]
        vals = [_fmt(x) for x in end.values] if end is not None else [""] * len(result.schema)
        dv = result.diverged_steps[i]
        w.writerow([i, result.config.master_seed, i, result.labels[i], "" if dv is None else dv]
                   + [_fmt(x) for x in result.initial[i].values] + vals)
    return buf.getvalue()


def fractions_json(result: EnsembleResult) -> str:
    doc = {
        "name": result.config.name,
        "master_seed": result.config.master_seed,
        "run_seeds": [[result.config.master_seed, i] for i in range(result.runs)],
        "runs": result.runs,
        "diverged": result.n_diverged,
        "fractions": result.fractions(),
        "indicators": result.indicators(),
        "config": result.config.to_dict(),
        "notes": ("network warm starts draw W_perp isotropically with the target orthogonal Gram; "
                  "run i uses stream (master_seed, i)"),
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def export(result, path: str | Path, format: str | None = None) -> None:
    """Write a Trajectory (csv), EnsembleResult (csv runs table or json aggregates) or
    ComparisonReport (csv)."""
    path = Path(path)
    fmt = format or path.suffix.lstrip(".")
    if isinstance(result, Trajectory):
        if fmt != "csv":
            raise ConfigError("trajectories export to csv")
        text = trajectory_to_csv(result)
    elif isinstance(result, EnsembleResult):
        if fmt == "csv":
            text = runs_csv(result)
        elif fmt == "json":
            text = fractions_json(result)
        else:
            raise ConfigError(f"unknown export format {fmt!r}")
    elif isinstance(result, ComparisonReport):
        text = result.to_csv()
    else:
        raise TypeError(f"cannot export {type(result).__name__}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
