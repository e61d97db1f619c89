import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgdlimits import ConfigError, DivergenceError, DomainError, SchemaError, SummaryVec, make_rng
from sgdlimits.core import RngStream
from sgdlimits.limits import (BGMM_SCHEMA, McConfig, OdeSystem, SYSTEM_NAMES, SdeSystem, ballistic_system,
                              bgmm_ballistic_rhs, bgmm_ballistic_rhs_noiseless, bgmm_diffusive,
                              bgmm_gaussian_expectations, build_system, c_alpha_bgmm, c_alpha_xor,
                              euler_maruyama, euler_maruyama_paths, loss_system, psd_sqrt, rk4_integrate,
                              tensor_pca_ballistic_rhs, tensor_pca_diffusive, tensor_pca_double_diffusive,
                              tensor_pca_loss_rhs, xor_ballistic_rhs, xor_ballistic_rhs_noiseless,
                              xor_diffusive, xor_gaussian_expectations)
from sgdlimits.limits.gmm import BGMM_COMPONENTS, XOR_COMPONENTS, network_field
from sgdlimits.limits.tensor import ballistic_field, corrector_part
from sgdlimits.models import BgmmModel, TensorPcaModel, sigmoid, xor_schema

TS = ("m", "r2")
ALPHA = 0.1


def tvec(m, r2):
    return SummaryVec(TS, [m, r2])


def mc(samples=100_000, seed=0):
    return McConfig(samples, RngStream(seed, 0))


def bvec(v, m, R=(0.0, 0.0, 0.0)):
    return SummaryVec(BGMM_SCHEMA, [*v, *m, *R])


def xvec(v, mmu, mnu, K=4, R=None):
    R = np.zeros(K * (K + 1) // 2) if R is None else R
    return SummaryVec(xor_schema(K), [*v, *mmu, *mnu, *R])


# --- tensor PCA ballistic -----------------------------------------------------------------

@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_equator_is_fixed(k):
    assert np.all(tensor_pca_ballistic_rhs(tvec(0.0, 1.0), k, 2.0).values == 0.0)


def test_ballistic_examples():
    assert np.allclose(tensor_pca_ballistic_rhs(tvec(np.sqrt(0.2), 1.0), 2, 1.2).values, 0.0, atol=1e-12)
    h = tensor_pca_ballistic_rhs(tvec(0.3, 1.0), 2, 1.2).values
    assert h[0] == pytest.approx(0.132, abs=1e-12)
    assert h[1] == pytest.approx(0.0, abs=1e-12)


def test_ballistic_domain_error():
    with pytest.raises(DomainError):
        tensor_pca_ballistic_rhs(tvec(0.1, -0.5), 2, 1.2)
    with pytest.raises(DomainError):
        tensor_pca_loss_rhs(SummaryVec(("m", "r2", "Phi"), [0.1, -0.5, 0.0]), 2, 1.2)


def test_ridge_term_and_c_delta():
    # dm/dt carries -alpha m; dr2/dt carries -2 alpha r2 and the 4 c_delta k R^{2k-2} corrector
    h0 = ballistic_field(np.array([0.4, 0.9]), 3, 2.0, 1.0, 0.0)
    h1 = ballistic_field(np.array([0.4, 0.9]), 3, 2.0, 1.0, 0.25)
    assert h1[0] - h0[0] == pytest.approx(-0.25 * 0.4)
    assert h1[1] - h0[1] == pytest.approx(-2 * 0.25 * 0.9)


def test_loss_rhs_examples():
    S3 = ("m", "r2", "Phi")
    assert tensor_pca_loss_rhs(SummaryVec(S3, [0.0, 1.0, 0.3]), 3, 2.0).values[2] == 0.0
    out = tensor_pca_loss_rhs(SummaryVec(S3, [np.sqrt(0.2), 1.0, 0.0]), 2, 1.2).values
    assert abs(out[2]) < 1e-12


@pytest.mark.parametrize("k,lam,c", [(2, 1.2, 1.0), (3, 3.5, 1.0), (3, 2.0, 0.5)])
def test_loss_coordinate_tracks_population_loss(k, lam, c):
    model = TensorPcaModel(4, k, lam)
    u0 = SummaryVec(("m", "r2", "Phi"), [0.6, 0.8, 0.0])
    tr = rk4_integrate(loss_system(k, lam, c), u0, 2.0, 1e-3, record_stride=100)
    phi0 = model.population_loss(tvec(0.6, 0.8))
    for row in tr.values:
        assert row[2] == pytest.approx(model.population_loss(tvec(row[0], row[1])) - phi0, abs=1e-8)


@given(st.floats(-2, 2), st.floats(0, 3), st.sampled_from([2, 4, 6]), st.floats(0.1, 5))
def test_tensor_field_odd_in_m_for_even_k(m, r2, k, lam):
    a = ballistic_field(np.array([m, r2]), k, lam, 1.0)
    b = ballistic_field(np.array([-m, r2]), k, lam, 1.0)
    assert b[0] == pytest.approx(-a[0], rel=1e-12, abs=1e-12)
    assert b[1] == pytest.approx(a[1], rel=1e-12, abs=1e-12)


@given(st.floats(-1.5, 1.5), st.floats(0, 2), st.floats(0.01, 3))
def test_tensor_corrector_linear_in_c_delta(m, r2, c):
    u = np.array([m, r2])
    g = ballistic_field(u, 3, 2.0, c) - ballistic_field(u, 3, 2.0, 0.0)
    assert np.allclose(g, corrector_part(u, 3, c), rtol=1e-10, atol=1e-10)
    assert np.allclose(corrector_part(u, 3, 2 * c), 2 * corrector_part(u, 3, c), rtol=1e-12)


# --- tensor PCA diffusive -----------------------------------------------------------------

def test_diffusive_k2_is_the_ou_of_the_threshold():
    sde = tensor_pca_diffusive(2, 1.3)
    x = np.array([0.7, 1.0])
    assert sde.drift(x)[0] == pytest.approx(4 * 0.3 * 0.7)
    assert sde.sigma(x)[0, 0] == pytest.approx(8.0)


def test_diffusive_k3_modes():
    assert tensor_pca_diffusive(3, 10.0).drift(np.array([1.0, 1.0]))[0] == pytest.approx(-6.0)
    assert tensor_pca_diffusive(3, 10.0, Lambda=1.0).drift(np.array([1.0, 1.0]))[0] == pytest.approx(0.0)
    assert tensor_pca_diffusive(3, 10.0).drift(np.array([1.0, 2.0]))[1] == pytest.approx(-4 * 3 * 4 * 1.0)
    with pytest.raises(ConfigError):
        tensor_pca_diffusive(2, 1.0, Lambda=1.0)
    with pytest.raises(DomainError):
        tensor_pca_diffusive(3, 1.0).factor(np.array([0.0, -1.0]))


def test_double_diffusive_coefficients():
    sde = tensor_pca_double_diffusive(2, 0.0)
    assert np.allclose(sde.drift(np.array([1.0, 1.0])), [-4.0, -8.0])
    S = sde.sigma(np.zeros(2))
    assert np.allclose(S, np.diag([8.0, 8.0]))
    # stationary variance of the second coordinate: 8 / 16
    assert S[1, 1] / (2 * 8.0) == pytest.approx(0.5)


def test_double_diffusive_noises_independent():
    sde = tensor_pca_double_diffusive(2, 0.8)
    times, vals = euler_maruyama_paths(sde, SummaryVec(("mt", "rt"), [0.0, 0.0]), 20.0, 1e-2,
                                       [make_rng(5, i) for i in range(100)])
    dm = np.diff(vals[:, :, 0], axis=1).ravel()
    dr = np.diff(vals[:, :, 1], axis=1).ravel()
    assert abs(np.corrcoef(dm, dr)[0, 1]) < 0.02


# --- networks: Gaussian functionals and finite-lambda fields ------------------------------

def test_v_zero_gives_quarter_probabilities():
    u = bvec([0.0, 0.0], [0.8, -0.3], [0.5, 0.1, 0.4])
    G = bgmm_gaussian_expectations(u, 3.0, mc(40_000))
    # sigma(0) = 1/2 so (sigma - y)^2 = 1/4 on every sample
    assert np.all(G.B <= 0.25 + 1e-12)
    P11 = 4 * G.B[0, 0]
    assert 0.0 < P11 <= 1.0
    assert np.allclose(G.B, G.B.T)


def test_large_lambda_limits_of_functionals():
    u = bvec([1.0, 1.0], [1.0, 1.0], [0.3, 0.0, 0.3])
    G = bgmm_gaussian_expectations(u, 1e6, mc())
    assert G.A_mu == pytest.approx(-0.5 * sigmoid(-2.0), abs=1e-4)
    # the perpendicular functional is O(1/lambda)
    assert np.all(np.abs(G.A_perp) <= 1e-6)


def test_network_origin_is_fixed():
    h, se = bgmm_ballistic_rhs(bvec([0, 0], [0, 0]), 5.0, ALPHA, 1.0, mc(), with_se=True)
    assert np.all(np.abs(h.values) <= 3 * se.values + 1e-12)
    h, se = xor_ballistic_rhs(xvec(np.zeros(4), np.zeros(4), np.zeros(4)), 5.0, ALPHA, 1.0, mc(), 4, with_se=True)
    assert np.all(np.abs(h.values) <= 3 * se.values + 1e-12)


def test_bgmm_stable_point_residual_at_large_lambda():
    a = np.sqrt(c_alpha_bgmm(ALPHA))
    h, se = bgmm_ballistic_rhs(bvec([a, -a], [a, -a]), 1e6, ALPHA, 1.0, mc(), with_se=True)
    assert np.linalg.norm(h.values) <= 3 * np.linalg.norm(se.values) + 1e-3


def test_xor_fixed_point_residual_at_large_lambda():
    # one unit per block: mu+ = {1}, mu- = {2}, nu+ = {3}, nu- = {4}
    a = np.sqrt(c_alpha_xor(ALPHA))
    u = xvec([a, a, -a, -a], [a, -a, 0, 0], [0, 0, -a, a])
    h, se = xor_ballistic_rhs(u, 1e6, ALPHA, 1.0, mc(), 4, with_se=True)
    assert np.linalg.norm(h.values) <= 3 * np.linalg.norm(se.values) + 1e-3


def test_xor_nu_functional_vanishes_off_its_direction():
    a = np.sqrt(c_alpha_xor(ALPHA))
    u = xvec([a, a, -a, -a], [a, -a, 0, 0], [0, 0, -a, a], R=0.01 * np.eye(4)[np.triu_indices(4)])
    G = xor_gaussian_expectations(u, 1e6, mc(), 4)
    assert np.all(np.abs(G.A_nu[:2]) <= 3 * G.se_A[:2, 1] + 1e-12)


@given(st.integers(0, 1000))
def test_corrector_nonnegative_and_linear(seed):
    r = make_rng(seed, 0)
    A = r.normal((2, 2))
    R = A @ A.T
    vals = np.array([*r.normal(2), *r.normal(2), R[0, 0], R[0, 1], R[1, 1]])
    m = mc(2_000, seed)
    base = network_field(vals, 2, 1, BGMM_COMPONENTS, 2.0, ALPHA, 0.0, m)
    g1 = network_field(vals, 2, 1, BGMM_COMPONENTS, 2.0, ALPHA, 1.0, m) - base
    g2 = network_field(vals, 2, 1, BGMM_COMPONENTS, 2.0, ALPHA, 2.0, m) - base
    assert g1[4] >= 0 and g1[6] >= 0
    assert np.allclose(g2, 2 * g1, atol=1e-12)
    assert np.all(g1[:4] == 0)


def test_mc_standard_errors_scale():
    u = bvec([0.7, -0.4], [0.5, 0.2], [0.6, 0.1, 0.5])
    s1 = bgmm_gaussian_expectations(u, 4.0, mc(50_000, 1)).se_B
    s2 = bgmm_gaussian_expectations(u, 4.0, mc(100_000, 2)).se_B
    ratio = s1[s1 > 0] / s2[s1 > 0]
    assert np.all(np.abs(ratio / np.sqrt(2) - 1) < 0.1)


def test_non_psd_gram_rejected():
    with pytest.raises(DomainError):
        bgmm_gaussian_expectations(bvec([1, 1], [0, 0], [1.0, 2.0, 1.0]), 4.0, mc(1000))


def test_schema_mismatch_rejected():
    with pytest.raises(SchemaError):
        bgmm_ballistic_rhs_noiseless(tvec(0, 1), ALPHA)


# --- noiseless fields ---------------------------------------------------------------------

def test_bgmm_noiseless_examples():
    h = bgmm_ballistic_rhs_noiseless(bvec([1, 1], [1, 1]), ALPHA).values
    assert h[2] == pytest.approx(0.5 * sigmoid(-2.0) - 0.1, abs=1e-12)
    assert h[2] == pytest.approx(-0.04040, abs=1e-5)
    a = np.sqrt(np.log(4.0))
    assert np.max(np.abs(bgmm_ballistic_rhs_noiseless(bvec([a, -a], [a, -a]), ALPHA).values)) < 1e-12
    assert np.all(bgmm_ballistic_rhs_noiseless(bvec([0, 0], [0, 0]), ALPHA).values == 0)


def test_bgmm_noiseless_ridge_decay_of_gram():
    h = bgmm_ballistic_rhs_noiseless(bvec([0.3, 0.2], [0.1, -0.4], [1.0, 0.5, 2.0]), ALPHA).values
    assert np.allclose(h[4:], -2 * ALPHA * np.array([1.0, 0.5, 2.0]))


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_bgmm_noiseless_symmetries(x):
    v, m = np.array(x[:2]), np.array(x[2:])
    h = bgmm_ballistic_rhs_noiseless(bvec(v, m), ALPHA).values
    hs = bgmm_ballistic_rhs_noiseless(bvec(-v, -m), ALPHA).values
    assert np.allclose(hs[:4], -h[:4], atol=1e-12)
    hx = bgmm_ballistic_rhs_noiseless(bvec(v[::-1], m[::-1]), ALPHA).values
    assert np.allclose(hx[[1, 0, 3, 2]], h[:4], atol=1e-12)


def test_xor_noiseless_examples():
    a = np.sqrt(np.log(1.5))
    assert a == pytest.approx(0.63677, abs=1e-5)
    # mu+ = {1}, mu- = {2}, nu+ = {3}, nu- = {4}
    u = xvec([a, a, -a, -a], [a, -a, 0, 0], [0, 0, -a, a])
    assert np.max(np.abs(xor_ballistic_rhs_noiseless(u, ALPHA, 4).values)) <= 1e-12
    assert np.all(xor_ballistic_rhs_noiseless(xvec(*np.zeros((3, 4))), ALPHA, 4).values == 0)


def test_xor_noiseless_inward_above_threshold():
    for a in (0.3, 0.6, 1.0):
        u = xvec([a, a, -a, -a], [a, -a, 0, 0], [0, 0, -a, a])
        h = xor_ballistic_rhs_noiseless(u, 0.2, 4).values
        assert float(u.values @ h) < 0


def test_sign_tags_at_zero():
    a = np.sqrt(np.log(1.5))
    u = xvec([a, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0])
    plus = xor_ballistic_rhs_noiseless(u, ALPHA, 4, tags=np.tile([1.0, 1.0], (4, 1))).values
    minus = xor_ballistic_rhs_noiseless(u, ALPHA, 4, tags=np.tile([-1.0, -1.0], (4, 1))).values
    zero = xor_ballistic_rhs_noiseless(u, ALPHA, 4).values
    assert not np.allclose(plus, minus)
    assert np.allclose(zero, 0.5 * (plus + minus))


# --- network diffusive --------------------------------------------------------------------

def test_bgmm_diffusive_axis_point():
    a = np.array([np.sqrt(np.log(4.0)), 0.0])
    sde = bgmm_diffusive(a, ALPHA)
    S = sde.sigma(np.zeros(7))
    assert S[0, 0] == pytest.approx(0.01 * np.log(4.0))
    assert np.all(S[[1, 3], :] == 0) and np.all(S[:, [1, 3]] == 0)
    assert np.all(sde.drift(np.zeros(7)) == 0)
    with pytest.raises(DomainError):
        bgmm_diffusive([1.0, 1.0], ALPHA)
    with pytest.raises(DomainError):
        bgmm_diffusive(a, 0.3)


def test_xor_diffusive_entries():
    a = np.sqrt(np.log(1.5) / 2)
    sde = xor_diffusive([a, a], [-a, -a], ALPHA)
    S = sde.sigma(np.zeros(18))
    assert S[0, 0] == pytest.approx(3 * 0.01 * np.log(1.5) / 2)
    assert S[0, 0] == pytest.approx(0.006082, abs=1e-6)
    assert S[0, 2] == pytest.approx(-0.01 * a * (-a))
    assert np.linalg.eigvalsh(S).min() >= -1e-10
    with pytest.raises(DomainError):
        xor_diffusive([a, 0.0], [a, a], ALPHA)


def ring_point(C, theta, sign=1.0):
    return sign * np.sqrt(C) * np.array([np.cos(theta), np.sin(theta)])


@given(st.floats(0.01, np.pi / 2 - 0.01), st.floats(0.01, 0.24))
def test_bgmm_diffusive_rank_one(theta, alpha):
    S = bgmm_diffusive(ring_point(c_alpha_bgmm(alpha), theta), alpha).sigma(np.zeros(7))
    w = np.linalg.eigvalsh(S)
    assert w.min() >= -1e-10
    assert int(np.sum(w > 1e-8)) == 1


@given(st.floats(0.01, np.pi / 2 - 0.01), st.floats(0.01, np.pi / 2 - 0.01), st.floats(0.01, 0.12),
       st.booleans())
def test_xor_diffusive_rank_two(t1, t2, alpha, flip):
    C = c_alpha_xor(alpha)
    S = xor_diffusive(ring_point(C, t1), ring_point(C, t2, -1.0 if flip else 1.0), alpha).sigma(np.zeros(18))
    w = np.linalg.eigvalsh(S)
    assert w.min() >= -1e-10
    assert int(np.sum(w > 1e-8)) == 2


def test_diffusive_coupling_matches_linearized_noiseless_field():
    # finite-difference Jacobian of the noiseless field at an interior ring point
    C = c_alpha_bgmm(ALPHA)
    a = ring_point(C, 0.6)
    base = np.concatenate([a, a, np.zeros(3)])
    f = lambda x: bgmm_ballistic_rhs_noiseless(SummaryVec(BGMM_SCHEMA, x), ALPHA).values
    J = np.column_stack([(f(base + 1e-6 * e) - f(base - 1e-6 * e)) / 2e-6 for e in np.eye(7)])
    drift = bgmm_diffusive(a, ALPHA).drift
    Jd = np.column_stack([drift(e) for e in np.eye(7)])
    assert np.allclose(J, Jd, atol=1e-6)
    literal = bgmm_diffusive(a, ALPHA, literal_coupling=True).drift
    assert not np.allclose(np.column_stack([literal(e) for e in np.eye(7)]), J, atol=1e-3)


# --- integrators --------------------------------------------------------------------------

def test_rk4_constant_and_exponential():
    zero = OdeSystem(("x",), lambda u: np.zeros_like(u))
    tr = rk4_integrate(zero, SummaryVec(("x",), [2.5]), 1.0, 0.1)
    assert np.all(tr.values == 2.5)
    decay = OdeSystem(("x",), lambda u: -u)
    errs = [abs(rk4_integrate(decay, SummaryVec(("x",), [1.0]), 1.0, h).final()["x"] - np.exp(-1)) for h in (0.1, 0.05)]
    assert 13 < errs[0] / errs[1] < 19


def test_rk4_lands_on_horizon_and_self_converges():
    sys_ = ballistic_system(2, 1.2)
    u0 = tvec(0.3, 1.0)
    a = rk4_integrate(sys_, u0, 10.0, 1e-2)
    b = rk4_integrate(sys_, u0, 10.0, 2.5e-3)
    assert a.t_end == 10.0 and b.t_end == 10.0
    assert abs(a.final()["m"] - b.final()["m"]) < 1e-6
    assert abs(b.final()["m"] - np.sqrt(0.2)) < 1e-3
    c = rk4_integrate(sys_, u0, 0.25, 0.1)
    assert np.allclose(c.times, [0.0, 0.1, 0.2, 0.25])


def test_rk4_divergence_error_has_time():
    blow = OdeSystem(("x",), lambda u: u ** 3)
    with pytest.raises(DivergenceError) as info:
        rk4_integrate(blow, SummaryVec(("x",), [10.0]), 5.0, 0.01)
    assert info.value.time is not None


def test_schema_checked_by_integrators():
    with pytest.raises(SchemaError):
        rk4_integrate(ballistic_system(2, 1.2), SummaryVec(("a", "b"), [0, 1]), 1.0)


def test_em_zero_noise_matches_rk4():
    ode = ballistic_system(2, 1.2)
    sde = SdeSystem(TS, ode.rhs, lambda x: np.zeros((2, 1)), 1)
    u0 = tvec(0.3, 1.0)
    em = euler_maruyama(sde, u0, 2.0, 1e-3, make_rng(0, 0))
    assert np.max(np.abs(em.final().values - rk4_integrate(ode, u0, 2.0).final().values)) < 5e-3


def test_em_ou_stationary_variance():
    sde = tensor_pca_diffusive(2, 0.8)  # dX = -0.8 X dt + 2 sqrt(2) dB at r2 = 1
    times, vals = euler_maruyama_paths(sde, SummaryVec(("mt", "r2"), [0.0, 1.0]), 200.0, 1e-2,
                                       [make_rng(21, i) for i in range(40)], record_stride=10)
    x = vals[:, times >= 20.0, 0]
    assert x.var() == pytest.approx(5.0, rel=0.1)


def test_em_pure_diffusion_variance():
    sde = SdeSystem(("x",), lambda u: np.zeros_like(u), lambda u: np.array([[1.5]]), 1, constant_factor=True)
    _, vals = euler_maruyama_paths(sde, SummaryVec(("x",), [0.0]), 2.0, 0.01, [make_rng(22, i) for i in range(4000)])
    assert vals[:, -1, 0].var() == pytest.approx(1.5 ** 2 * 2.0, rel=0.07)


def test_em_paths_match_single_path():
    sde = tensor_pca_diffusive(3, 1.0)
    u0 = SummaryVec(("mt", "r2"), [0.5, 0.8])
    _, vals = euler_maruyama_paths(sde, u0, 1.0, 1e-2, [make_rng(3, i) for i in range(3)])
    single = euler_maruyama(sde, u0, 1.0, 1e-2, make_rng(3, 2))
    assert np.allclose(vals[2], single.values, atol=1e-12)


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    a = np.array([2.0, 0.0, 0.0])
    a = a / np.linalg.norm(a) * 2.0
    b = np.array([1.2, -1.6])
    assert np.allclose(psd_sqrt(np.outer(b, b)), np.outer(b, b) / 2.0)
    w = ALPHA * np.array([1.0, 0.6, 1.0, 0.6])
    S = np.outer(w, w)
    F = psd_sqrt(S)
    assert np.allclose(F @ F, S, atol=1e-12)
    with pytest.raises(DomainError):
        psd_sqrt(np.diag([1.0, -1e-3]))
    assert np.allclose(psd_sqrt(np.diag([1.0, -1e-12])), np.diag([1.0, 0.0]))


# --- registry -----------------------------------------------------------------------------

def test_every_system_name_builds():
    a = np.sqrt(c_alpha_bgmm(ALPHA) / 2)
    b = np.sqrt(c_alpha_xor(ALPHA) / 2)
    params = {
        "tensor-ballistic": {"k": 2, "lambda": 1.2}, "tensor-loss": {"k": 3, "lambda": 4.0},
        "tensor-diffusive": {"k": 2, "lambda": 0.8}, "tensor-double-diffusive": {"k": 2, "lambda": 0.8},
        "bgmm-ballistic": {"lambda": 10.0, "alpha": ALPHA, "mc_samples": 1000},
        "bgmm-noiseless": {"alpha": ALPHA}, "bgmm-diffusive": {"a": [a, a], "alpha": ALPHA},
        "xor-ballistic": {"lambda": 10.0, "alpha": ALPHA, "mc_samples": 1000},
        "xor-noiseless": {"alpha": ALPHA}, "xor-diffusive": {"a_mu": [b, b], "a_nu": [-b, -b], "alpha": ALPHA},
    }
    assert set(params) == set(SYSTEM_NAMES)
    for name, p in params.items():
        s = build_system(name, p)
        x = np.full(len(s.schema), 0.1)
        out = s.rhs(x) if isinstance(s, OdeSystem) else s.drift(x)
        assert out.shape == (len(s.schema),) and np.all(np.isfinite(out))


def test_registry_errors_name_the_key():
    with pytest.raises(ConfigError, match="bogus"):
        build_system("tensor-ballistic", {"k": 2, "lambda": 1.0, "bogus": 1})
    with pytest.raises(ConfigError, match="lambda"):
        build_system("tensor-ballistic", {"k": 2})
    with pytest.raises(ConfigError, match="nope"):
        build_system("nope", {})


@given(st.integers(0, 10 ** 6))
def test_diffusion_matrices_psd(seed):
    r = make_rng(seed, 0)
    k = int(r.uniform() * 3) + 2
    assert np.linalg.eigvalsh(tensor_pca_diffusive(k, 1.0).sigma(np.array([r.normal(), abs(r.normal())]))).min() >= -1e-10
    assert np.linalg.eigvalsh(tensor_pca_double_diffusive(k, 1.0).sigma(np.zeros(2))).min() >= -1e-10
