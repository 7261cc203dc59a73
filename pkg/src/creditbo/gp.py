"""Gaussian process regression on the unit cube.

Matern-5/2 kernel, exact posteriors via Cholesky factorization, marginal
likelihood hyperparameter fitting with derivative-free restarts, and joint
posterior path sampling on finite grids.  All inputs live in [0,1]^d;
lengthscales are expressed in those normalized units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

__all__ = [
    "KernelParams",
    "ObservationSet",
    "GpPosterior",
    "FitConfig",
    "kernel_eval",
    "kernel_matrix",
    "fit_posterior",
    "posterior_at",
    "log_marginal_likelihood",
    "fit_hyperparams",
    "mle_search_space",
    "sample_paths",
    "PATH_GRID_CAP",
]

# Joint path draws need a |grid| x |grid| factorization; keep that bounded.
PATH_GRID_CAP = 256

_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    """Matern-5/2 hyperparameters: lengthscale(s), signal and noise variance.

    ``lengthscale`` holds one shared value, or one value per input dimension
    when fitted with ARD.
    """

    lengthscale: np.ndarray
    signal_variance: float = 1.0
    noise_variance: float = 0.01

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscale, dtype=float))
        object.__setattr__(self, "lengthscale", ls)
        if ls.ndim != 1 or np.any(ls <= 0):
            raise ValueError("lengthscales must be strictly positive")
        if self.signal_variance <= 0 or self.noise_variance <= 0:
            raise ValueError("variances must be strictly positive")


@dataclass(frozen=True)
class ObservationSet:
    """Noisy observations (x_i, y_i) with x_i in the unit cube."""

    locations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.locations, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if X.ndim != 2:
            raise ValueError("locations must be a (t, d) array")
        if y.shape != (X.shape[0],):
            raise ValueError("values must match the number of locations")
        if X.size and (X.min() < -1e-9 or X.max() > 1 + 1e-9):
            raise ValueError("locations must lie inside the unit cube")
        object.__setattr__(self, "locations", X)
        object.__setattr__(self, "values", y)

    @property
    def size(self) -> int:
        return self.locations.shape[0]

    @property
    def dimension(self) -> int:
        return self.locations.shape[1]


def _check_lengthscale(params: KernelParams, dim: int) -> np.ndarray:
    ls = params.lengthscale
    if ls.size == 1:
        return np.full(dim, ls[0])
    if ls.size != dim:
        raise ValueError(f"ARD lengthscale has size {ls.size}, expected {dim}")
    return ls


def kernel_matrix(params: KernelParams, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Matern-5/2 cross-covariance between row-point sets."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point sets differ in dimension")
    ls = _check_lengthscale(params, X.shape[1])
    r = cdist(X / ls, Y / ls)
    return params.signal_variance * (1.0 + _SQRT5 * r + 5.0 * r**2 / 3.0) * np.exp(-_SQRT5 * r)


def kernel_eval(params: KernelParams, x, y) -> float:
    """Kernel value between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError("points differ in dimension")
    return float(kernel_matrix(params, x[None, :], y[None, :])[0, 0])


def _chol_with_jitter(mat: np.ndarray, signal_variance: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with escalating diagonal jitter.

    Jitter starts at 1e-10 * signal variance and grows tenfold up to
    1e-4 * signal variance before giving up.
    """
    try:
        return cholesky(mat, lower=True), 0.0
    except LinAlgError:
        pass
    n = mat.shape[0]
    jitter = 1e-10 * signal_variance
    while jitter <= 1e-4 * signal_variance * (1 + 1e-12):
        try:
            return cholesky(mat + jitter * np.eye(n), lower=True), jitter
        except LinAlgError:
            jitter *= 10.0
    raise LinAlgError(
        f"matrix not positive definite even with jitter up to {1e-4 * signal_variance:.3g}; "
        "kernel matrix is too ill-conditioned"
    )


@dataclass(frozen=True)
class GpPosterior:
    """Fitted GP: kernel, training data, and the factorized posterior.

    Immutable once fitted, so it is safe to share across concurrent readers.
    """

    kernel: KernelParams
    data: ObservationSet
    prior_mean: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at query rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        prior_var = self.kernel.signal_variance
        if self.data.size == 0:
            n = X.shape[0]
            return np.full(n, self.prior_mean), np.full(n, math.sqrt(prior_var))
        k_xq = kernel_matrix(self.kernel, self.data.locations, X)
        mean = self.prior_mean + k_xq.T @ self.alpha
        a = solve_triangular(self.chol, k_xq, lower=True)
        var = np.maximum(prior_var - np.sum(a**2, axis=0), 0.0)
        return mean, np.sqrt(var)


def fit_posterior(data: ObservationSet, params: KernelParams, prior_mean: float = 0.0) -> GpPosterior:
    """Factorize K + noise*I and precompute the solve against centered targets.

    With no data this degenerates to the prior (mean m, variance k(x,x)).
    """
    if data.size == 0:
        return GpPosterior(
            kernel=params,
            data=data,
            prior_mean=prior_mean,
            chol=np.empty((0, 0)),
            alpha=np.empty(0),
            jitter=0.0,
        )
    gram = kernel_matrix(params, data.locations)
    gram[np.diag_indices_from(gram)] += params.noise_variance
    chol, jitter = _chol_with_jitter(gram, params.signal_variance)
    centered = data.values - prior_mean
    alpha = solve_triangular(
        chol.T, solve_triangular(chol, centered, lower=True), lower=False
    )
    return GpPosterior(
        kernel=params,
        data=data,
        prior_mean=prior_mean,
        chol=chol,
        alpha=alpha,
        jitter=jitter,
    )


def posterior_at(gp: GpPosterior, x) -> tuple[float, float]:
    """Posterior (mean, std) at a single point."""
    mean, std = gp.predict(np.atleast_1d(np.asarray(x, dtype=float))[None, :])
    return float(mean[0]), float(std[0])


def log_marginal_likelihood(
    data: ObservationSet, params: KernelParams, prior_mean: float = 0.0
) -> float:
    """log N(y | m, K + noise*I); -inf when the factorization fails outright."""
    if data.size == 0:
        raise ValueError("log marginal likelihood needs at least one observation")
    gram = kernel_matrix(params, data.locations)
    gram[np.diag_indices_from(gram)] += params.noise_variance
    try:
        chol = cholesky(gram, lower=True)
    except LinAlgError:
        return -np.inf
    centered = data.values - prior_mean
    solved = solve_triangular(chol, centered, lower=True)
    return float(
        -0.5 * solved @ solved
        - np.sum(np.log(np.diag(chol)))
        - 0.5 * data.size * math.log(2.0 * math.pi)
    )


@dataclass
class FitConfig:
    """Settings for marginal-likelihood hyperparameter search.

    Bounds are in log space.  ``high_d`` applies the high-dimensional recipe:
    shift the log-lengthscale center up by 0.5*log(d) and pin the signal
    variance at 1.
    """

    restarts: int = 8
    ard: bool = False
    high_d: bool = False
    log_lengthscale_bounds: tuple[float, float] = (math.log(0.01), math.log(10.0))
    log_signal_bounds: tuple[float, float] = (math.log(0.01), math.log(100.0))
    log_noise_bounds: tuple[float, float] = (math.log(1e-6), math.log(1.0))
    maxiter: int = 200


def mle_search_space(dim: int, config: FitConfig) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Initial log-parameter vector and box bounds for the MLE search.

    Layout: [log ls] * (dim if ARD else 1), then log signal variance unless
    pinned by high_d, then log noise variance.
    """
    shift = 0.5 * math.log(dim) if config.high_d else 0.0
    ls_lo, ls_hi = config.log_lengthscale_bounds
    ls_bounds = (ls_lo + shift, ls_hi + shift)
    ls_init = math.log(0.5) + shift
    n_ls = dim if config.ard else 1
    init = [ls_init] * n_ls
    bounds = [ls_bounds] * n_ls
    if not config.high_d:
        init.append(0.0)
        bounds.append(config.log_signal_bounds)
    init.append(math.log(0.01))
    bounds.append(config.log_noise_bounds)
    return np.array(init), bounds


def _unpack_theta(theta: np.ndarray, dim: int, config: FitConfig) -> KernelParams:
    n_ls = dim if config.ard else 1
    lengthscale = np.exp(theta[:n_ls])
    if config.high_d:
        signal, noise = 1.0, math.exp(theta[n_ls])
    else:
        signal, noise = math.exp(theta[n_ls]), math.exp(theta[n_ls + 1])
    return KernelParams(lengthscale=lengthscale, signal_variance=signal, noise_variance=noise)


_LOG_2PI = math.log(2.0 * math.pi)


def _neg_lml_objective(data: ObservationSet, config: FitConfig):
    """Fast negative-LML closure for the MLE search.

    Precomputes the unscaled distance matrix once in the isotropic case; each
    evaluation then only rescales and refactorizes.  Must agree with
    log_marginal_likelihood (tested), just without its construction overhead.
    """
    X = data.locations
    y = data.values
    t = data.size
    n_ls = data.dimension if config.ard else 1
    base_dist = None if config.ard else cdist(X, X)

    def objective(theta: np.ndarray) -> float:
        if config.ard:
            ls = np.exp(theta[:n_ls])
            r = cdist(X / ls, X / ls)
        else:
            r = base_dist / math.exp(theta[0])
        signal = 1.0 if config.high_d else math.exp(theta[n_ls])
        noise = math.exp(theta[-1])
        gram = signal * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-_SQRT5 * r)
        gram.flat[:: t + 1] += noise
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            return 1e25
        solved = solve_triangular(chol, y, lower=True, check_finite=False)
        value = -0.5 * (solved @ solved) - np.log(np.diag(chol)).sum() - 0.5 * t * _LOG_2PI
        return -value if np.isfinite(value) else 1e25

    return objective


def fit_hyperparams(
    data: ObservationSet, config: FitConfig, rng: np.random.Generator
) -> KernelParams:
    """Maximize the log marginal likelihood over log-parameters.

    Nelder-Mead refinement from ``config.restarts`` starts: one canonical
    center plus seeded uniform draws inside the bounds.  Deterministic given
    the generator state.
    """
    if data.size < 2:
        raise ValueError("hyperparameter fitting needs at least two observations")
    init, bounds = mle_search_space(data.dimension, config)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    objective = _neg_lml_objective(data, config)

    starts = [init]
    for _ in range(max(config.restarts - 1, 0)):
        starts.append(rng.uniform(lo, hi))

    best_theta, best_value = None, np.inf
    for start in starts:
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": config.maxiter, "xatol": 1e-3, "fatol": 1e-4},
        )
        if res.fun < best_value and res.fun < 1e24:
            best_theta, best_value = res.x, res.fun
    if best_theta is None:
        raise RuntimeError("every MLE restart produced a non-finite likelihood")
    return _unpack_theta(np.clip(best_theta, lo, hi), data.dimension, config)


def sample_paths(
    gp: GpPosterior, grid: np.ndarray, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` joint posterior paths on a finite grid.

    Returns a (count, len(grid)) matrix; each row is one draw from the joint
    Gaussian with the posterior mean and covariance on the grid.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("grid must be non-empty")
    if grid.shape[0] > PATH_GRID_CAP:
        raise ValueError(f"grid of {grid.shape[0]} points exceeds the cap of {PATH_GRID_CAP}")
    if count < 1:
        raise ValueError("need at least one path")
    cov = kernel_matrix(gp.kernel, grid)
    if gp.data.size:
        k_xg = kernel_matrix(gp.kernel, gp.data.locations, grid)
        mean = gp.prior_mean + k_xg.T @ gp.alpha
        a = solve_triangular(gp.chol, k_xg, lower=True)
        cov = cov - a.T @ a
    else:
        mean = np.full(grid.shape[0], gp.prior_mean)
    cov = 0.5 * (cov + cov.T)
    factor, _ = _chol_with_jitter(cov, gp.kernel.signal_variance)
    normals = rng.standard_normal((grid.shape[0], count))
    return mean[None, :] + (factor @ normals).T
