"""GP core: kernel, exact posteriors, MLE fitting, path sampling.

The posterior checks compare the factorized implementation against dense
closed-form solves; the MLE checks use sample-then-recover and exhaustive
grid oracles.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import LinAlgError

from creditbo.gp import (
    FitConfig,
    KernelParams,
    ObservationSet,
    _chol_with_jitter,
    fit_hyperparams,
    fit_posterior,
    kernel_eval,
    kernel_matrix,
    log_marginal_likelihood,
    mle_search_space,
    posterior_at,
    sample_paths,
)

UNIT_POINTS = st.lists(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=2, max_size=4
)


def dense_posterior(params, X, y, xq, prior_mean=0.0):
    """Closed-form posterior via a dense solve; the oracle for fit_posterior."""
    K = kernel_matrix(params, X) + params.noise_variance * np.eye(len(X))
    k_vec = kernel_matrix(params, X, xq[None, :])[:, 0]
    solve = np.linalg.solve(K, y - prior_mean)
    mean = prior_mean + k_vec @ solve
    var = kernel_eval(params, xq, xq) - k_vec @ np.linalg.solve(K, k_vec)
    return mean, max(var, 0.0)


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------


def test_kernel_at_zero_distance_gives_signal_variance():
    x = np.array([0.3, 0.4])
    assert kernel_eval(KernelParams(1.0), x, x) == pytest.approx(1.0)
    assert kernel_eval(KernelParams(1.0, signal_variance=2.0), x, x) == pytest.approx(2.0)


def test_kernel_at_unit_distance():
    # (1 + sqrt5 + 5/3) exp(-sqrt5), evaluated independently
    expected = (1.0 + math.sqrt(5.0) + 5.0 / 3.0) * math.exp(-math.sqrt(5.0))
    got = kernel_eval(KernelParams(1.0), np.array([0.0]), np.array([1.0]))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.5239941088318203, abs=1e-12)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        kernel_eval(KernelParams(1.0), np.zeros(2), np.zeros(3))


@given(UNIT_POINTS, UNIT_POINTS, st.floats(0.05, 3.0))
def test_kernel_symmetry(xs, ys, ls):
    n = min(len(xs), len(ys))
    x, y = np.array(xs[:n]), np.array(ys[:n])
    p = KernelParams(ls)
    assert kernel_eval(p, x, y) == kernel_eval(p, y, x)


@settings(max_examples=20)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_kernel_psd_with_tiny_jitter(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 3))
    K = kernel_matrix(KernelParams(0.3), X) + 1e-10 * np.eye(n)
    np.linalg.cholesky(K)


def test_ard_lengthscale_shape_checked():
    with pytest.raises(ValueError):
        kernel_matrix(KernelParams(np.array([0.5, 0.5])), np.zeros((2, 3)))


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        KernelParams(-0.5)
    with pytest.raises(ValueError):
        KernelParams(0.5, signal_variance=0.0)
    with pytest.raises(ValueError):
        KernelParams(0.5, noise_variance=-1.0)


# ---------------------------------------------------------------------------
# Posterior
# ---------------------------------------------------------------------------


def test_single_observation_posterior():
    data = ObservationSet(np.array([[0.5]]), np.array([1.0]))
    gp = fit_posterior(data, KernelParams(1.0, 1.0, 0.01))
    mean, std = posterior_at(gp, np.array([0.5]))
    assert mean == pytest.approx(1.0 / 1.01, abs=1e-12)
    assert std**2 == pytest.approx(1.0 - 1.0 / 1.01, abs=1e-12)


def test_two_coincident_observations_against_dense_solve():
    params = KernelParams(1.0, 1.0, 0.01)
    X = np.array([[0.5], [0.5]])
    y = np.array([1.0, 1.0])
    gp = fit_posterior(ObservationSet(X, y), params)
    mean, std = posterior_at(gp, np.array([0.5]))
    K = kernel_matrix(params, X) + 0.01 * np.eye(2)
    k_vec = kernel_matrix(params, X, np.array([[0.5]]))[:, 0]
    expected = k_vec @ np.linalg.solve(K, y)
    assert mean == pytest.approx(expected, abs=1e-10)
    assert mean == pytest.approx(1.0 / 1.005, abs=1e-10)
    assert std**2 == pytest.approx(1.0 - k_vec @ np.linalg.solve(K, k_vec), abs=1e-10)


def test_empty_data_returns_prior():
    gp = fit_posterior(ObservationSet(np.empty((0, 2)), np.empty(0)),
                       KernelParams(0.5, 2.0, 0.01), prior_mean=0.7)
    mean, std = posterior_at(gp, np.array([0.2, 0.9]))
    assert mean == 0.7
    assert std == pytest.approx(math.sqrt(2.0))


def test_near_noiseless_interpolation():
    rng = np.random.default_rng(1)
    X = rng.random((6, 2))
    y = rng.normal(size=6)
    gp = fit_posterior(ObservationSet(X, y), KernelParams(0.4, 1.0, 1e-10))
    mean, std = gp.predict(X)
    np.testing.assert_allclose(mean, y, atol=1e-4)
    np.testing.assert_allclose(std, 0.0, atol=1e-4)


def test_far_query_recovers_prior():
    params = KernelParams(0.02, 1.3, 0.01)
    data = ObservationSet(np.zeros((3, 1)), np.array([2.0, 2.1, 1.9]))
    gp = fit_posterior(data, params, prior_mean=0.25)
    mean, std = posterior_at(gp, np.array([1.0]))
    assert mean == pytest.approx(0.25, abs=1e-3)
    assert std == pytest.approx(math.sqrt(1.3), abs=1e-3)


def test_posterior_matches_dense_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        t = rng.integers(1, 9)
        d = rng.integers(1, 5)
        params = KernelParams(rng.uniform(0.1, 1.0), rng.uniform(0.5, 2.0), rng.uniform(1e-4, 0.1))
        X = rng.random((t, d))
        y = rng.normal(size=t)
        m = rng.normal()
        gp = fit_posterior(ObservationSet(X, y), params, prior_mean=m)
        xq = rng.random(d)
        mean, std = posterior_at(gp, xq)
        ref_mean, ref_var = dense_posterior(params, X, y, xq, m)
        assert mean == pytest.approx(ref_mean, rel=1e-8, abs=1e-10)
        assert std**2 == pytest.approx(ref_var, rel=1e-8, abs=1e-10)


def test_variance_never_exceeds_prior_at_training_points():
    rng = np.random.default_rng(5)
    params = KernelParams(0.3, 1.7, 0.05)
    X = rng.random((12, 3))
    gp = fit_posterior(ObservationSet(X, rng.normal(size=12)), params)
    _, std = gp.predict(X)
    assert np.all(std <= math.sqrt(1.7) + 1e-12)


def test_adding_observation_never_increases_variance():
    rng = np.random.default_rng(6)
    params = KernelParams(0.4, 1.0, 0.01)
    X = rng.random((7, 2))
    y = rng.normal(size=7)
    queries = rng.random((20, 2))
    small = fit_posterior(ObservationSet(X[:-1], y[:-1]), params)
    big = fit_posterior(ObservationSet(X, y), params)
    _, std_small = small.predict(queries)
    _, std_big = big.predict(queries)
    assert np.all(std_big <= std_small + 1e-10)


def test_jitter_ladder_fails_on_indefinite_matrix():
    with pytest.raises(LinAlgError):
        _chol_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0)


def test_stored_factor_reconstructs_gram_matrix():
    rng = np.random.default_rng(14)
    params = KernelParams(0.3, 1.2, 0.02)
    X = rng.random((10, 2))
    gp = fit_posterior(ObservationSet(X, rng.normal(size=10)), params)
    gram = kernel_matrix(params, X) + (0.02 + gp.jitter) * np.eye(10)
    np.testing.assert_allclose(gp.chol @ gp.chol.T, gram, rtol=1e-8)


def test_observations_must_live_in_unit_cube():
    with pytest.raises(ValueError):
        ObservationSet(np.array([[1.4]]), np.array([0.0]))


# ---------------------------------------------------------------------------
# Marginal likelihood and hyperparameter fitting
# ---------------------------------------------------------------------------


def test_lml_matches_dense_formula():
    rng = np.random.default_rng(3)
    X = rng.random((5, 2))
    y = rng.normal(size=5)
    params = KernelParams(0.5, 1.2, 0.05)
    K = kernel_matrix(params, X) + 0.05 * np.eye(5)
    expected = (
        -0.5 * y @ np.linalg.solve(K, y)
        - 0.5 * np.linalg.slogdet(K)[1]
        - 2.5 * math.log(2 * math.pi)
    )
    assert log_marginal_likelihood(ObservationSet(X, y), params) == pytest.approx(expected, abs=1e-9)


def test_fit_beats_exhaustive_grid():
    rng = np.random.default_rng(8)
    X = rng.random((25, 2))
    y = np.sin(6 * X[:, 0]) + 0.1 * rng.normal(size=25)
    data = ObservationSet(X, y)
    config = FitConfig(restarts=8)
    fitted = fit_hyperparams(data, config, np.random.default_rng(0))
    best = log_marginal_likelihood(data, fitted)
    for ls in np.exp(np.linspace(*config.log_lengthscale_bounds, 5)):
        for sf in np.exp(np.linspace(*config.log_signal_bounds, 5)):
            for sn in np.exp(np.linspace(*config.log_noise_bounds, 5)):
                assert best >= log_marginal_likelihood(data, KernelParams(ls, sf, sn)) - 1e-6


def test_lengthscale_recovery_from_known_prior():
    truth = KernelParams(0.2, 1.0, 0.01)
    grid = np.linspace(0, 1, 200)[:, None]
    prior = fit_posterior(ObservationSet(np.empty((0, 1)), np.empty(0)), truth)
    hits = 0
    config = FitConfig(restarts=4)
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        f = sample_paths(prior, grid, 1, rng)[0]
        y = f + rng.normal(0, 0.1, size=200)
        fitted = fit_hyperparams(ObservationSet(grid, y), config, rng)
        if abs(math.log(fitted.lengthscale[0]) - math.log(0.2)) <= 0.5:
            hits += 1
    assert hits >= 16


def test_fit_is_deterministic_given_seed():
    rng = np.random.default_rng(4)
    data = ObservationSet(rng.random((15, 2)), rng.normal(size=15))
    a = fit_hyperparams(data, FitConfig(restarts=4), np.random.default_rng(9))
    b = fit_hyperparams(data, FitConfig(restarts=4), np.random.default_rng(9))
    assert np.array_equal(a.lengthscale, b.lengthscale)
    assert a.signal_variance == b.signal_variance
    assert a.noise_variance == b.noise_variance


def test_high_d_mode_shifts_lengthscale_center_and_pins_signal():
    dim = 100
    plain_init, plain_bounds = mle_search_space(dim, FitConfig())
    high_init, high_bounds = mle_search_space(dim, FitConfig(high_d=True))
    shift = 0.5 * math.log(dim)
    assert high_init[0] - plain_init[0] == pytest.approx(shift)
    assert high_bounds[0][0] - plain_bounds[0][0] == pytest.approx(shift)
    assert high_bounds[0][1] - plain_bounds[0][1] == pytest.approx(shift)
    # signal variance is pinned at 1, so one fewer free parameter
    assert len(high_init) == len(plain_init) - 1
    rng = np.random.default_rng(11)
    data = ObservationSet(rng.random((10, 3)), rng.normal(size=10))
    fitted = fit_hyperparams(data, FitConfig(restarts=2, high_d=True), rng)
    assert fitted.signal_variance == 1.0


def test_ard_fit_returns_per_dimension_lengthscales():
    rng = np.random.default_rng(12)
    data = ObservationSet(rng.random((12, 3)), rng.normal(size=12))
    fitted = fit_hyperparams(data, FitConfig(restarts=2, ard=True), rng)
    assert fitted.lengthscale.shape == (3,)


def test_fit_needs_two_observations():
    with pytest.raises(ValueError):
        fit_hyperparams(
            ObservationSet(np.zeros((1, 1)), np.zeros(1)), FitConfig(), np.random.default_rng(0)
        )


# ---------------------------------------------------------------------------
# Path sampling
# ---------------------------------------------------------------------------


def test_degenerate_paths_equal_posterior_mean():
    rng = np.random.default_rng(21)
    X = rng.random((5, 1))
    y = rng.normal(size=5)
    gp = fit_posterior(ObservationSet(X, y), KernelParams(0.5, 1.0, 1e-10))
    paths = sample_paths(gp, X, 8, rng)
    mean, _ = gp.predict(X)
    np.testing.assert_allclose(paths, np.tile(mean, (8, 1)), atol=1e-3)


def test_prior_single_point_moments():
    gp = fit_posterior(ObservationSet(np.empty((0, 1)), np.empty(0)), KernelParams(1.0, 1.0, 0.01))
    draws = sample_paths(gp, np.array([[0.5]]), 10_000, np.random.default_rng(17))[:, 0]
    assert abs(draws.mean()) < 0.05
    assert abs(draws.var() - 1.0) < 0.1


def test_two_point_correlation():
    params = KernelParams(1.0, 1.0, 0.01)
    # distance with kernel correlation 0.9, found by bisection
    lo, hi = 0.0, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if kernel_eval(params, np.zeros(1), np.array([mid])) > 0.9:
            lo = mid
        else:
            hi = mid
    grid = np.array([[0.0], [lo]])
    gp = fit_posterior(ObservationSet(np.empty((0, 1)), np.empty(0)), params)
    draws = sample_paths(gp, grid, 10_000, np.random.default_rng(23))
    corr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert corr == pytest.approx(0.9, abs=0.05)


def test_path_moments_match_posterior_on_small_grid():
    rng = np.random.default_rng(29)
    X = rng.random((6, 2))
    y = rng.normal(size=6)
    params = KernelParams(0.4, 1.0, 0.05)
    gp = fit_posterior(ObservationSet(X, y), params)
    grid = rng.random((5, 2))
    K = 10_000
    draws = sample_paths(gp, grid, K, np.random.default_rng(31))
    mean, std = gp.predict(grid)
    tol = 3.0 / math.sqrt(K) * math.sqrt(params.signal_variance)
    np.testing.assert_allclose(draws.mean(axis=0), mean, atol=tol)
    k_xg = kernel_matrix(params, X, grid)
    cov = kernel_matrix(params, grid) - k_xg.T @ np.linalg.solve(
        kernel_matrix(params, X) + 0.05 * np.eye(6), k_xg
    )
    np.testing.assert_allclose(np.cov(draws.T), cov, atol=3 * tol)


def test_paths_are_seeded_reproducible():
    gp = fit_posterior(ObservationSet(np.empty((0, 2)), np.empty(0)), KernelParams(0.5))
    grid = np.random.default_rng(1).random((9, 2))
    a = sample_paths(gp, grid, 4, np.random.default_rng(77))
    b = sample_paths(gp, grid, 4, np.random.default_rng(77))
    np.testing.assert_array_equal(a, b)


def test_grid_cap_and_count_validation():
    gp = fit_posterior(ObservationSet(np.empty((0, 1)), np.empty(0)), KernelParams(0.5))
    with pytest.raises(ValueError):
        sample_paths(gp, np.zeros((257, 1)), 1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_paths(gp, np.zeros((1, 1)), 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_paths(gp, np.empty((0, 1)), 1, np.random.default_rng(0))
