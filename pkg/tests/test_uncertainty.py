import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from garo.uncertainty import (DiscreteScenarios, Ellipsoid, GammaInterval, KLBall, NormBall, calibrate_gamma,
                              filter_scenarios, kl_worst_case, regularize_covariance, worst_case_cost)

finite = st.floats(-5, 5, allow_nan=False)
vec3 = arrays(float, 3, elements=finite)


def test_ellipse_boundary_sampling():
    model = Ellipsoid(np.array([1.0, 2.0]), np.eye(2))
    x = np.array([1.0, 0.0])
    assert worst_case_cost(model, x, 4.0) == pytest.approx(3.0, abs=1e-12)
    theta = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    boundary = model.p0 + 2.0 * np.column_stack([np.cos(theta), np.sin(theta)])
    assert np.max(boundary @ x) == pytest.approx(3.0, abs=1e-3)


def test_l1_ball_vertex_enumeration():
    model = NormBall(np.array([1.0, 2.0]), "l1")
    x = np.array([0.5, 0.5])
    assert worst_case_cost(model, x, 2.0) == pytest.approx(2.5, abs=1e-12)
    verts = model.p0 + 2.0 * np.vstack([np.eye(2), -np.eye(2)])
    assert np.max(verts @ x) == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("norm", ["l1", "l2", "linf"])
def test_norm_ball_dense_sampling_3d(norm):
    rng = np.random.default_rng(1)
    p0 = rng.normal(size=3)
    model = NormBall(p0, norm)
    x = rng.normal(size=3)
    gamma = 1.7
    # directions on the unit sphere of the ball's norm, plus its vertices
    order = {"l1": 1, "l2": 2, "linf": np.inf}[norm]
    dirs = rng.normal(size=(200_000, 3))
    dirs /= np.linalg.norm(dirs, ord=order, axis=1)[:, None]
    corners = np.array(list(itertools.product([-1.0, 1.0], repeat=3)))
    extra = {"l1": np.vstack([np.eye(3), -np.eye(3)]), "linf": corners, "l2": np.zeros((0, 3))}[norm]
    pts = p0 + gamma * np.vstack([dirs, extra])
    assert worst_case_cost(model, x, gamma) == pytest.approx(np.max(pts @ x), abs=1e-3)


def test_ellipsoid_dense_sampling_3d():
    rng = np.random.default_rng(2)
    B = rng.normal(size=(3, 3))
    model = Ellipsoid(rng.normal(size=3), B @ B.T + 0.1 * np.eye(3))
    x = rng.normal(size=3)
    u = rng.normal(size=(200_000, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    pts = model.p0 + math.sqrt(2.5) * u @ model.chol_t
    assert np.all(model.statistic(pts) <= 2.5 + 1e-9)
    assert worst_case_cost(model, x, 2.5) == pytest.approx(np.max(pts @ x), abs=1e-3)


def test_gamma_zero_is_nominal():
    x = np.array([0.3, -1.0])
    p0 = np.array([2.0, 0.5])
    for model in (NormBall(p0, "l2"), Ellipsoid(p0, np.diag([2.0, 3.0])), DiscreteScenarios(p0)):
        assert worst_case_cost(model, x, 0.0) == pytest.approx(x @ p0)
    kl = KLBall(np.array([1.0, 3.0]), np.array([0.25, 0.75]))
    assert worst_case_cost(kl, None, 0.0) == pytest.approx(2.5)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        NormBall(np.zeros(2)).worst_case(np.ones(2), -0.1)
    with pytest.raises(ValueError):
        GammaInterval(-1.0, 1.0)
    with pytest.raises(ValueError):
        GammaInterval(2.0, 1.0)


def test_kl_large_radius_approaches_max():
    kl = KLBall(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
    values = [kl.worst_case(None, g) for g in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(v <= 1.0 for v in values)
    assert np.all(np.diff(values) >= -1e-12)
    assert values[-1] > 0.999


def test_kl_degenerate_losses():
    assert kl_worst_case(np.full(4, 2.5), np.full(4, 0.25), 3.0) == 2.5


def test_kl_matches_primal_search():
    # two-point support: the primal is a 1-D search over the top-loss mass
    l = np.array([0.0, 1.0])
    w = np.array([0.7, 0.3])
    gamma = 0.6
    q = np.linspace(1e-9, 1 - 1e-9, 2_000_001)
    kl = w[0] * np.log(w[0] / (1 - q)) + w[1] * np.log(w[1] / q)
    best = np.max(np.where(kl <= gamma**2, q, -np.inf))
    assert kl_worst_case(l, w, gamma) == pytest.approx(best, abs=1e-6)


def test_kl_weights_validated():
    with pytest.raises(ValueError):
        KLBall(np.zeros(2), np.array([0.6, 0.6]))


@given(vec3, vec3, st.floats(0, 10), st.floats(0, 10), st.sampled_from(["l1", "l2", "linf"]))
def test_norm_ball_monotone_translation(p0, x, g1, g2, norm):
    lo, hi = sorted((g1, g2))
    model = NormBall(p0, norm)
    assert model.worst_case(x, lo) <= model.worst_case(x, hi) + 1e-9
    shifted = NormBall(p0 + 3.0, norm)
    assert model.worst_case(x, hi) - x @ p0 == pytest.approx(shifted.worst_case(x, hi) - x @ (p0 + 3.0), abs=1e-8)


@given(vec3, vec3, st.floats(0, 10), st.floats(0, 5), st.sampled_from(["l1", "l2", "linf"]))
def test_norm_ball_positive_homogeneity(p0, x, gamma, t, norm):
    model = NormBall(p0, norm)
    lhs = model.worst_case(t * x, gamma) - t * x @ p0
    rhs = t * (model.worst_case(x, gamma) - x @ p0)
    assert lhs == pytest.approx(rhs, abs=1e-8)


@given(vec3, vec3, st.floats(0, 10), st.floats(0, 10), st.integers(0, 1000))
def test_ellipsoid_monotone_translation(p0, x, g1, g2, seed):
    B = np.random.default_rng(seed).normal(size=(3, 3))
    sigma = regularize_covariance(B @ B.T)
    lo, hi = sorted((g1, g2))
    model = Ellipsoid(p0, sigma)
    assert model.worst_case(x, lo) <= model.worst_case(x, hi) + 1e-9
    moved = Ellipsoid(p0 - 1.5, sigma)
    assert model.worst_case(x, hi) - x @ p0 == pytest.approx(moved.worst_case(x, hi) - x @ moved.p0, abs=1e-8)


@given(st.integers(0, 10**6), st.floats(0, 20), st.floats(0, 20))
def test_discrete_monotone(seed, g1, g2):
    rng = np.random.default_rng(seed)
    model = DiscreteScenarios(rng.normal(size=(8, 2)), Ellipsoid(np.zeros(2), np.eye(2)))
    lo, hi = sorted((g1, g2))
    lo = max(lo, float(model.statistics.min()))
    hi = max(hi, lo)
    x = rng.normal(size=2)
    assert model.worst_case(x, lo) <= model.worst_case(x, hi)


def test_discrete_without_metric_is_plain_max():
    pts = np.array([[1.0, 2.0], [2.0, 1.0], [0.0, 0.0]])
    model = DiscreteScenarios(pts)
    x = np.array([0.25, 0.75])
    for g in (0.0, 1.0, 100.0):
        assert model.worst_case(x, g) == pytest.approx(1.75)


@given(st.integers(0, 10**6))
def test_kl_lipschitz_on_random_tables(seed):
    rng = np.random.default_rng(seed)
    k = rng.integers(2, 8)
    losses = rng.normal(size=k) * rng.uniform(0.1, 5)
    weights = rng.dirichlet(np.ones(k))
    model = KLBall(losses, weights)
    lip = model.lipschitz()
    g = np.sort(rng.uniform(0, 3, 12))
    vals = np.array([model.worst_case(None, t) for t in g])
    assert np.all(np.diff(vals) >= -1e-9)
    assert np.all(np.abs(np.diff(vals)) <= lip * np.diff(g) + 1e-6)
    assert np.all(vals <= losses.max() + 1e-12)


def test_calibration_example():
    model = Ellipsoid(np.zeros(1), np.ones((1, 1)))
    data = np.array([1.0, 2.0, 3.0, 4.0, 10.0])
    assert calibrate_gamma(model, data, 0.8) == 16.0
    assert calibrate_gamma(model, data, 0.0) == 0.0
    assert calibrate_gamma(model, np.zeros((7, 1)), 0.9) == 0.0


@given(st.integers(0, 10**6), st.floats(0, 0.99))
def test_calibration_coverage(seed, rho):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(37, 2))
    for model in (Ellipsoid(np.zeros(2), np.diag([1.0, 2.0])), NormBall(np.zeros(2), "linf")):
        g = calibrate_gamma(model, data, rho)
        assert np.sum(model.statistic(data) <= g) >= rho * len(data)


def test_calibration_rejects_models_without_statistic():
    with pytest.raises(TypeError):
        calibrate_gamma(DiscreteScenarios(np.zeros((2, 2))), np.zeros((3, 2)), 0.5)
    with pytest.raises(ValueError):
        calibrate_gamma(NormBall(np.zeros(2)), np.zeros((3, 2)), 1.0)


def test_regularization_examples():
    np.testing.assert_array_equal(regularize_covariance(np.eye(2)), np.eye(2))
    np.testing.assert_allclose(regularize_covariance(np.zeros((2, 2))), 1e-4 * np.eye(2))
    out = regularize_covariance(np.diag([1.0, 1e-6]))
    np.testing.assert_allclose(out, np.diag([1 + 1e-4, 1e-6 + 1e-4]))
    assert np.linalg.eigvalsh(out)[0] >= 1e-4 - 1e-12
    with pytest.raises(ValueError):
        regularize_covariance(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(st.integers(0, 10**6))
def test_regularized_spectrum(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(4, 2))
    out = regularize_covariance(B @ B.T)   # rank two
    assert np.linalg.eigvalsh(out)[0] >= 1e-4 - 1e-12


def test_filter_scenarios_nested():
    rng = np.random.default_rng(0)
    model = Ellipsoid(np.zeros(2), np.eye(2))
    pts = rng.normal(size=(100, 2))
    sizes = [len(filter_scenarios(pts, model, g)) for g in (0.1, 0.5, 1.0, 4.0, 100.0)]
    assert sizes == sorted(sizes) and sizes[-1] == 100
