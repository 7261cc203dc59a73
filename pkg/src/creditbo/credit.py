"""Counterfactual credits for observed points.

The optimum proxy averages the maxima of posterior sample paths.  Each
observation gets a Gaussian likelihood of having produced that proxy, scores
are ranked against the mean likelihood, and ranks map linearly onto a bounded
credit interval.  A KNN average extends the discrete credits to a smooth
field over the domain, and a decaying exponent turns the field into the
acquisition weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .gp import GpPosterior, sample_paths

__all__ = [
    "OptimumProxy",
    "CreditState",
    "CreditField",
    "optimum_proxy",
    "likelihood_scores",
    "log_likelihood_scores",
    "credits_from_scores",
    "compute_credit_state",
    "propagate_credit",
    "propagate_credits",
    "credit_weight",
]

DEFAULT_STABILIZER = 1e-8
DEFAULT_CREDIT_FLOOR = 0.1
DEFAULT_CREDIT_CEIL = 1.0


@dataclass(frozen=True)
class OptimumProxy:
    """Monte-Carlo estimate of the global maximum from posterior paths."""

    path_maxima: np.ndarray
    path_argmax_points: np.ndarray
    value: float


@dataclass(frozen=True)
class CreditState:
    """Per-observation credits with the intermediates that produced them."""

    likelihoods: np.ndarray
    baseline: float
    raw_scores: np.ndarray
    credits: np.ndarray
    stabilizer: float
    credit_floor: float
    credit_ceil: float


def optimum_proxy(
    gp: GpPosterior, grid: np.ndarray, count: int, rng: np.random.Generator
) -> OptimumProxy:
    """Draw ``count`` joint paths on the grid and average their maxima."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    paths = sample_paths(gp, grid, count, rng)
    argmax = np.argmax(paths, axis=1)
    maxima = paths[np.arange(paths.shape[0]), argmax]
    return OptimumProxy(
        path_maxima=maxima,
        path_argmax_points=grid[argmax],
        value=float(maxima.mean()),
    )


def log_likelihood_scores(
    proxy_value: float,
    means: np.ndarray,
    stds: np.ndarray,
    stabilizer: float = DEFAULT_STABILIZER,
) -> np.ndarray:
    """Log Gaussian density of the proxy under each observation's marginal.

    The log form keeps the ordering intact even when the densities themselves
    underflow (tight marginals put the proxy astronomically far in the tail).
    """
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    if means.shape != stds.shape or means.ndim != 1 or means.size == 0:
        raise ValueError("means and stds must be equal-length non-empty vectors")
    if np.any(stds < 0) or stabilizer <= 0:
        raise ValueError("stds must be non-negative and the stabilizer positive")
    var = stds**2 + stabilizer
    return -((proxy_value - means) ** 2) / (2.0 * var) - 0.5 * np.log(2.0 * np.pi * var)


def likelihood_scores(
    proxy_value: float,
    means: np.ndarray,
    stds: np.ndarray,
    stabilizer: float = DEFAULT_STABILIZER,
) -> np.ndarray:
    """Gaussian density of the proxy under each observation's marginal.

    The stabilizer pads the variance so zero-variance marginals stay finite.
    """
    dens = np.exp(log_likelihood_scores(proxy_value, means, stds, stabilizer))
    # keep strictly positive even when the exponent underflows
    return np.maximum(dens, np.finfo(float).tiny)


def _rank_credits(scores: np.ndarray, credit_floor: float, credit_ceil: float) -> np.ndarray:
    """Map scores to credits via normalized <=-counting ranks (ties share the
    higher rank); a single score gets the ceiling outright."""
    t = scores.size
    if t == 1:
        return np.array([credit_ceil])
    counts = (scores[None, :] <= scores[:, None]).sum(axis=1)
    ranks = (counts - 1.0) / (t - 1.0)
    return credit_floor + (credit_ceil - credit_floor) * ranks


def credits_from_scores(
    likelihoods: np.ndarray,
    stabilizer: float = DEFAULT_STABILIZER,
    credit_floor: float = DEFAULT_CREDIT_FLOOR,
    credit_ceil: float = DEFAULT_CREDIT_CEIL,
) -> np.ndarray:
    """Rank-normalize likelihoods into credits in [credit_floor, credit_ceil].

    Raw score: likelihood over the mean likelihood (stabilized), minus one.
    """
    ell = np.asarray(likelihoods, dtype=float)
    if ell.ndim != 1 or ell.size == 0:
        raise ValueError("need a non-empty likelihood vector")
    if ell.size == 1:
        return np.array([credit_ceil])
    scores = ell / (ell.mean() + stabilizer) - 1.0
    return _rank_credits(scores, credit_floor, credit_ceil)


def compute_credit_state(
    proxy_value: float,
    means: np.ndarray,
    stds: np.ndarray,
    stabilizer: float = DEFAULT_STABILIZER,
    credit_floor: float = DEFAULT_CREDIT_FLOOR,
    credit_ceil: float = DEFAULT_CREDIT_CEIL,
) -> CreditState:
    """Full likelihood -> score -> rank -> credit pipeline for one iteration.

    The raw score is a strictly increasing function of the likelihood, so the
    ranks are computed on the log densities directly: identical ordering, but
    immune to the underflow that tight posterior marginals cause.
    """
    log_ell = log_likelihood_scores(proxy_value, means, stds, stabilizer)
    ell = np.maximum(np.exp(log_ell), np.finfo(float).tiny)
    scaled = np.exp(log_ell - log_ell.max())
    raw = scaled / (scaled.mean() + stabilizer) - 1.0
    credits = _rank_credits(log_ell, credit_floor, credit_ceil)
    return CreditState(
        likelihoods=ell,
        baseline=float(ell.mean()),
        raw_scores=raw,
        credits=credits,
        stabilizer=stabilizer,
        credit_floor=credit_floor,
        credit_ceil=credit_ceil,
    )


@dataclass
class CreditField:
    """Discrete credits plus the KNN machinery to query them anywhere."""

    locations: np.ndarray
    credits: np.ndarray
    neighbor_count: int
    _tree: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        self.locations = np.atleast_2d(np.asarray(self.locations, dtype=float))
        self.credits = np.asarray(self.credits, dtype=float)
        if self.credits.shape != (self.locations.shape[0],) or self.credits.size == 0:
            raise ValueError("credits must match the observed locations")
        if self.neighbor_count < 1:
            raise ValueError("neighbor_count must be at least 1")
        if np.any(self.credits <= 0):
            raise ValueError("credits must be strictly positive")
        self._tree = cKDTree(self.locations)

    @property
    def max_credit(self) -> float:
        return float(self.credits.max())


def propagate_credits(field_: CreditField, X: np.ndarray) -> np.ndarray:
    """Normalized credit field at query rows: mean credit of the nearest
    min(neighbor_count, t) observations, divided by the largest credit."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = min(field_.neighbor_count, field_.credits.size)
    _, idx = field_._tree.query(X, k=k)
    local = field_.credits[idx.reshape(X.shape[0], k)].mean(axis=1)
    return local / field_.max_credit


def propagate_credit(field_: CreditField, x) -> float:
    """Normalized credit field at a single point."""
    return float(propagate_credits(field_, np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def credit_weight(pi, step: int, tau: float, half_life: float):
    """Decaying credit weight pi ** (tau / (1 + step/half_life)).

    The exponent starts at tau, halves at step == half_life, and vanishes as
    the step count grows, so the weight drifts toward 1.
    """
    if tau <= 0 or half_life <= 0:
        raise ValueError("tau and half_life must be positive")
    if step < 0:
        raise ValueError("step must be non-negative")
    exponent = tau / (1.0 + step / half_life)
    return np.asarray(pi, dtype=float) ** exponent if np.ndim(pi) else float(pi) ** exponent
