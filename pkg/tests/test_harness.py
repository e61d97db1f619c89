import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgdlimits import ConfigError, DegenerateFitError, DomainError, SchemaError, SummaryVec, make_rng
from sgdlimits.core import read_trajectory_csv
from sgdlimits.harness import (EnsembleResult, ExperimentConfig, ModelConfig, compare_to_limit,
                               default_classifier, estimate_one_step, export, fit_ar1, fixed_point_by_label,
                               fractions_json, run_ensemble, runs_csv, warm_target)
from sgdlimits.limits import ballistic_system, bgmm_ballistic_rhs, rk4_integrate
from sgdlimits.limits.integrators import McConfig
from sgdlimits.models import BgmmModel, TensorPcaModel
from sgdlimits.models.base import ParamPoint


def tensor_cfg(**kw):
    base = {"model": {"family": "tensor", "n": 400, "k": 2, "lambda": 1.2}, "steps": 200, "runs": 3,
            "master_seed": 7, "record_stride": 10}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def ou_path(b, vol, delta, steps, rng):
    # exact AR(1) discretization of dX = b X dt + vol dB
    rho = np.exp(b * delta)
    s = vol * np.sqrt((np.exp(2 * b * delta) - 1) / (2 * b))
    z = rng.normal(steps)
    x = np.empty(steps)
    x[0] = 0.0
    for i in range(1, steps):
        x[i] = rho * x[i - 1] + s * z[i]
    return x


# --- configs ------------------------------------------------------------------------------

def test_config_rejects_unknown_keys_by_name():
    with pytest.raises(ConfigError, match="'speed'"):
        ExperimentConfig.from_dict({"model": {"family": "tensor", "n": 10, "k": 2}, "steps": 1, "speed": 3})
    with pytest.raises(ConfigError, match="'m'"):
        ModelConfig.from_dict({"family": "tensor", "n": 10, "k": 2, "m": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"model": {"family": "tensor", "n": 10, "k": 2}, "steps": 1, "runs": 0})
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"family": "tensor", "n": 10, "k": 2, "lambda": -1.0}).build()
    with pytest.raises(ConfigError, match="signature"):
        tensor_cfg(classify="signature")


def test_config_round_trip():
    cfg = tensor_cfg(init={"kind": "warm", "target": {"m": 0.3, "r2": 1.0}})
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.delta == 1.0 / 400


def test_warm_targets():
    cfg = tensor_cfg(init={"kind": "warm", "target": "stable:-m_⋆"})
    assert warm_target(cfg, ("m", "r2"))["m"] == pytest.approx(-np.sqrt(0.2))
    bad = tensor_cfg(init={"kind": "warm", "target": {"m": 0.3, "q": 1.0}})
    with pytest.raises(ConfigError, match="'q'"):
        warm_target(bad, ("m", "r2"))
    with pytest.raises(ConfigError, match="available"):
        fixed_point_by_label(cfg.model, "stable:nowhere")


# --- ensembles ----------------------------------------------------------------------------

def test_zero_steps_returns_initial_summary():
    cfg = tensor_cfg(steps=0, runs=1, init={"kind": "warm", "target": {"m": 0.3, "r2": 1.0}})
    res = run_ensemble(cfg)
    assert np.allclose(res.endpoints[0].values, [0.3, 1.0], atol=1e-12)
    assert np.allclose(res.initial[0].values, res.endpoints[0].values)


def test_random_init_is_near_equator():
    res = run_ensemble(tensor_cfg(steps=0, runs=5))
    for u in res.endpoints:
        assert abs(u["m"]) < 5 / np.sqrt(400)
        assert abs(u["m"] ** 2 + u["r2"] - 1.0) < 5 * np.sqrt(2 / 400)


def test_diverged_runs_are_labelled_not_fatal():
    cfg = ExperimentConfig.from_dict({"model": {"family": "tensor", "n": 50, "k": 4, "lambda": 1.0, "c_delta": 40.0},
                                      "steps": 200, "runs": 2, "master_seed": 1,
                                      "init": {"kind": "warm", "target": {"m": 0.0, "r2": 9.0}}})
    res = run_ensemble(cfg)
    assert res.labels == ["diverged", "diverged"]
    assert res.n_diverged == 2 and all(s is not None for s in res.diverged_steps)
    assert res.fractions() == {}


def test_ensemble_deterministic_across_threads():
    cfg = tensor_cfg(runs=230)
    a = run_ensemble(cfg, threads=1)
    b = run_ensemble(cfg, threads=3)
    assert runs_csv(a) == runs_csv(b)
    assert fractions_json(a) == fractions_json(b)
    c = run_ensemble(tensor_cfg(runs=230, master_seed=8))
    assert runs_csv(a) != runs_csv(c)


def test_run_prefix_is_stable():
    # run i depends only on (master_seed, i): a longer ensemble extends a shorter one
    a = run_ensemble(tensor_cfg(runs=5))
    b = run_ensemble(tensor_cfg(runs=8))
    for u, w in zip(a.endpoints, b.endpoints[:5]):
        assert np.array_equal(u.values, w.values)


def test_fractions_sum_and_errors():
    res = run_ensemble(tensor_cfg(runs=20, steps=4000, record_stride=4000))
    fr = res.fractions()
    assert sum(v["fraction"] for v in fr.values()) == pytest.approx(1.0)
    for v in fr.values():
        p = v["fraction"]
        assert v["se"] == pytest.approx(np.sqrt(p * (1 - p) / 20))
    assert set(res.indicators()) == {"stable"}


def test_classifier_modes():
    xor = ExperimentConfig.from_dict({"model": {"family": "xor", "N": 50, "K": 4, "lambda": 100.0, "alpha": 0.1},
                                      "steps": 0})
    a = np.sqrt(np.log(1.5))
    u = SummaryVec(xor.model.build().schema, [a, a, -a, -a, a, -a, 0, 0, 0, 0, -a, a] + [0.0] * 10)
    assert default_classifier(xor)(u).startswith("stable:I0={} mu+={1}")
    near = ExperimentConfig.from_dict({**xor.to_dict(), "classify": "nearest"})
    assert default_classifier(near)(u) == default_classifier(xor)(u)
    u2 = SummaryVec(u.schema, u.values + 0.2)
    assert default_classifier(near)(u2) == "unresolved"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**xor.to_dict(), "classify": "closest"})


def test_bgmm_indicator():
    cfg = ExperimentConfig.from_dict({"model": {"family": "bgmm", "N": 100, "lambda": 100.0, "alpha": 0.1},
                                      "steps": 0, "runs": 40, "master_seed": 3})
    res = run_ensemble(cfg)
    ind = res.indicators()["m1*m2<0"]
    assert ind["count"] == sum(u["m1"] * u["m2"] < 0 for u in res.endpoints)


# --- one-step oracle ----------------------------------------------------------------------

def test_one_step_needs_samples():
    model = TensorPcaModel(50, 2, 1.2)
    with pytest.raises(DomainError):
        estimate_one_step(model, model.init_random(make_rng(0, 0)), 0.02, 50, make_rng(0, 1))


def test_one_step_drift_tensor():
    n = 1000
    model = TensorPcaModel(n, 2, 1.2)
    x = model.warm_start(SummaryVec(("m", "r2"), [0.5, 1.0]), make_rng(1, 0))
    est = estimate_one_step(model, x, 1.0 / n, 100_000, make_rng(1, 1))
    target = np.array([-0.1, 0.0])
    assert np.all(np.abs(est.mean - target) <= 3 * est.se_mean + 10.0 / n)
    assert np.allclose(est.cov, est.cov.T) and np.linalg.eigvalsh(est.cov).min() >= -1e-10


def test_one_step_rescaled_variance():
    n = 1000
    model = TensorPcaModel(n, 2, 1.2)
    x = model.warm_start(SummaryVec(("m", "r2"), [0.0, 1.0]), make_rng(2, 0))
    est = estimate_one_step(model, x, 1.0 / n, 50_000, make_rng(2, 1),
                            transform=lambda U: np.sqrt(n) * U[:, :1], names=("mt",))
    assert est.cov[0, 0] == pytest.approx(8.0, rel=0.05)


def test_one_step_noiseless_covariance_vanishes():
    N = 200
    u = SummaryVec(BgmmModel(N=N).schema, [1.0, -0.7, 0.9, -0.4, 0.2, 0.0, 0.3])
    inf = BgmmModel(N=N, lam=np.inf, alpha=0.1)
    fin = BgmmModel(N=N, lam=10.0, alpha=0.1)
    x = inf.warm_start(u, make_rng(4, 0))
    c_inf = estimate_one_step(inf, x, 1.0 / N, 2000, make_rng(4, 1)).cov
    c_fin = estimate_one_step(fin, x, 1.0 / N, 2000, make_rng(4, 1)).cov
    # without input noise the orthogonal Gram moves deterministically
    assert np.abs(c_inf[4:, 4:]).max() < 1e-20
    assert np.abs(c_fin[4:, 4:]).max() > 1e-7
    c_small = estimate_one_step(inf, x, 0.1 / N, 2000, make_rng(4, 1)).cov
    assert np.abs(c_small).max() == pytest.approx(0.1 * np.abs(c_inf).max(), rel=1e-6)


def test_one_step_matches_network_rhs():
    N = 400
    model = BgmmModel(N=N, lam=10.0, alpha=0.1)
    u = SummaryVec(model.schema, [0.8, -0.5, 0.6, 0.3, 0.5, 0.1, 0.4])
    x = model.warm_start(u, make_rng(5, 0))
    est = estimate_one_step(model, x, 1.0 / N, 100_000, make_rng(5, 1))
    h = bgmm_ballistic_rhs(model.summary(x), 10.0, 0.1, 1.0, McConfig(200_000, make_rng(5, 2))).values
    assert np.all(np.abs(est.mean - h) <= 3 * est.se_mean + 10.0 / N + 5e-3)


# --- AR(1) --------------------------------------------------------------------------------

def test_ar1_recovers_ou():
    delta = 1e-3
    x = ou_path(-0.8, 2 * np.sqrt(2), delta, 100_000, make_rng(10, 0))
    fit = fit_ar1(x, delta)
    assert fit.drift == pytest.approx(-0.8, abs=0.15)
    assert fit.volatility == pytest.approx(2 * np.sqrt(2), rel=0.05)


def test_ar1_unbiased_over_paths():
    delta, b = 1e-2, -0.8
    drifts = [fit_ar1(ou_path(b, 1.0, delta, 40_000, make_rng(11, i)), delta).drift for i in range(50)]
    assert np.mean(drifts) == pytest.approx(b, rel=0.05)


def test_ar1_white_noise_and_errors():
    fit = fit_ar1(make_rng(12, 0).normal(5000), 1e-3)
    assert fit.drift == pytest.approx(-1e3, rel=0.05)
    with pytest.raises(DegenerateFitError):
        fit_ar1(np.ones(200), 1e-3)
    with pytest.raises(DomainError):
        fit_ar1(np.arange(50.0), 1e-3)


# --- comparison and export ----------------------------------------------------------------

def test_compare_self_is_zero():
    sys_ = ballistic_system(2, 1.2)
    tr = rk4_integrate(sys_, SummaryVec(("m", "r2"), [0.3, 1.0]), 5.0, 1e-3)
    rep = compare_to_limit(tr, sys_, window=(0.0, 5.0))
    assert rep.mean_distance < 1e-6
    rep2 = compare_to_limit([tr, tr], sys_, match_mode="per-run", window=(0.0, 5.0))
    assert max(rep2.per_run) < 1e-6
    with pytest.raises(ConfigError):
        compare_to_limit(tr, sys_, match_mode="best")


def test_deviation_shrinks_like_one_over_n():
    ns = [500, 1000, 2000, 4000]
    sq = []
    for n in ns:
        cfg = ExperimentConfig.from_dict({"model": {"family": "tensor", "n": n, "k": 2, "lambda": 1.2},
                                          "steps": 5 * n, "runs": 40, "master_seed": 31, "record_stride": n // 100,
                                          "init": {"kind": "warm", "target": {"m": 0.3, "r2": 1.0}}})
        res = run_ensemble(cfg)
        rep = compare_to_limit(res.trajectories, ballistic_system(2, 1.2), window=(0.0, 5.0))
        sq.append(np.mean(np.square(rep.per_run)))
    x = 1.0 / np.array(ns)
    slope, icpt = np.polyfit(x, sq, 1)
    r2 = 1 - np.sum((sq - (slope * x + icpt)) ** 2) / np.sum((sq - np.mean(sq)) ** 2)
    assert slope > 0 and r2 > 0.8


def test_compare_schema_mismatch():
    sys_ = ballistic_system(2, 1.2)
    tr = rk4_integrate(sys_, SummaryVec(("m", "r2"), [0.3, 1.0]), 1.0)
    from sgdlimits.limits import loss_system
    with pytest.raises(SchemaError):
        compare_to_limit(tr, loss_system(2, 1.2))


def test_export_round_trip_and_provenance(tmp_path):
    res = run_ensemble(tensor_cfg(runs=2))
    tr = res.trajectories[0]
    export(tr, tmp_path / "t.csv")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(back.values, tr.values) and np.array_equal(back.times, tr.times)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,m,r2"
    export(res, tmp_path / "e.json")
    doc = json.loads((tmp_path / "e.json").read_text())
    assert doc["master_seed"] == 7 and doc["run_seeds"] == [[7, 0], [7, 1]]
    assert doc["config"]["model"]["family"] == "tensor"
    export(res, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().startswith("run,master_seed,stream_index,label")
    with pytest.raises(ConfigError):
        export(res, tmp_path / "e.xml")


def test_export_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = run_ensemble(tensor_cfg(runs=1, steps=0))
    with pytest.raises(OSError, match="file"):
        export(res, blocker / "sub" / "e.json")


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_binomial_consistency_of_batches(seed):
    # two disjoint halves of one ensemble agree within 4 pooled standard errors
    res = run_ensemble(tensor_cfg(runs=60, steps=0, master_seed=seed), keep_trajectories=False)
    pos = np.array([u["m"] > 0 for u in res.endpoints], float)
    a, b = pos[:30], pos[30:]
    p = pos.mean()
    se = np.sqrt(max(p * (1 - p), 1e-12) * (2 / 30))
    assert abs(a.mean() - b.mean()) <= 4 * se + 1e-12
