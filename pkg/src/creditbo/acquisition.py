"""Acquisition rules and candidate-set maximization.

Provides plain UCB, credit-weighted UCB (the bracketed product
[(1-lam) + lam*w] * [mu + beta*sigma]), Thompson sampling with optional
credit weighting, and argmax selection over a candidate set with exclusion
of near-duplicates of observed points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .credit import CreditField, credit_weight, propagate_credits
from .gp import GpPosterior, posterior_at, sample_paths

__all__ = [
    "ACQUISITION_KINDS",
    "AcquisitionSpec",
    "beta_t",
    "ucb",
    "ucb_values",
    "credit_weighted_ucb",
    "credit_ucb_values",
    "thompson_values",
    "thompson_acq",
    "maximize_acquisition",
]

ACQUISITION_KINDS = ("ucb", "credit_ucb", "ts", "credit_ts", "random")


@dataclass
class AcquisitionSpec:
    """Which acquisition to run and its parameters.

    ``lam`` blends the credit weight into the score (0 recovers the plain
    acquisition), ``tau`` and ``half_life`` shape the weight decay, ``delta``
    feeds the confidence schedule, and ``nonneg_shift`` subtracts the
    candidate-set UCB minimum before weighting so the multiplicand cannot be
    negative.  ``beta_schedule`` may override the default beta rule with any
    step -> beta callable.
    """

    kind: str = "ucb"
    lam: float = 0.5
    tau: float = 1.0
    half_life: float = 20.0
    delta: float = 0.1
    candidate_count: int = 2048
    nonneg_shift: bool = False
    beta_schedule: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.kind not in ACQUISITION_KINDS:
            raise ValueError(f"kind must be one of {ACQUISITION_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.half_life <= 0:
            raise ValueError("half_life must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be at least 1")

    def beta(self, step: int) -> float:
        if self.beta_schedule is not None:
            return float(self.beta_schedule(step))
        return beta_t(step, self.delta)


def beta_t(step: int, delta: float) -> float:
    """Confidence multiplier sqrt(2 log(step^2 pi^2 / (6 delta)))."""
    if step < 1:
        raise ValueError("step must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(2.0 * math.log(step**2 * math.pi**2 / (6.0 * delta)))


def ucb_values(gp: GpPosterior, X: np.ndarray, beta: float) -> np.ndarray:
    """mu + beta*sigma at candidate rows."""
    mean, std = gp.predict(X)
    return mean + beta * std


def ucb(gp: GpPosterior, x, beta: float) -> float:
    """mu + beta*sigma at a single point."""
    mean, std = posterior_at(gp, x)
    return mean + beta * std


def credit_ucb_values(
    gp: GpPosterior,
    field: CreditField,
    X: np.ndarray,
    step: int,
    spec: AcquisitionSpec,
    beta: float | None = None,
) -> np.ndarray:
    """Credit-weighted UCB over candidate rows.

    The shift (when enabled) uses the minimum UCB over these same rows, so
    callers must pass the full candidate set of the iteration.
    """
    beta = spec.beta(step + 1) if beta is None else beta
    base = ucb_values(gp, X, beta)
    if spec.nonneg_shift:
        base = base - base.min()
    pi = propagate_credits(field, X)
    w = credit_weight(pi, step, spec.tau, spec.half_life)
    return ((1.0 - spec.lam) + spec.lam * w) * base


def credit_weighted_ucb(
    gp: GpPosterior,
    field: CreditField,
    x,
    step: int,
    spec: AcquisitionSpec,
    beta: float | None = None,
    shift: float = 0.0,
) -> float:
    """Credit-weighted UCB at one point; ``shift`` carries the candidate-set
    minimum when nonneg_shift is in force."""
    beta = spec.beta(step + 1) if beta is None else beta
    base = ucb(gp, x, beta) - shift
    w = credit_weight(propagate_credits(field, np.atleast_2d(x))[0], step, spec.tau, spec.half_life)
    return float(((1.0 - spec.lam) + spec.lam * w) * base)


def thompson_values(gp: GpPosterior, grid: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One joint posterior path draw over the grid."""
    return sample_paths(gp, grid, 1, rng)[0]


def thompson_acq(
    gp: GpPosterior,
    grid: np.ndarray,
    rng: np.random.Generator,
    field: CreditField | None = None,
    step: int = 0,
    spec: AcquisitionSpec | None = None,
) -> np.ndarray:
    """Grid argmax of a single path draw; with a credit field the drawn values
    are multiplied by (1-lam) + lam*w before the argmax."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    values = thompson_values(gp, grid, rng)
    if field is not None:
        if spec is None:
            raise ValueError("credit-weighted Thompson sampling needs an AcquisitionSpec")
        pi = propagate_credits(field, grid)
        w = credit_weight(pi, step, spec.tau, spec.half_life)
        values = ((1.0 - spec.lam) + spec.lam * w) * values
    return grid[int(np.argmax(values))].copy()


def maximize_acquisition(
    acq,
    candidates: np.ndarray,
    exclusion: np.ndarray | None = None,
    dedupe_radius: float = 1e-6,
) -> np.ndarray:
    """Pick the highest-scoring candidate outside the exclusion radius.

    ``acq`` is either a callable mapping the candidate rows to scores or a
    precomputed score vector.  Candidates within ``dedupe_radius`` of any
    excluded point are skipped; if that removes everything, the global argmax
    wins.  Ties break to the lowest index.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise ValueError("candidate set must be non-empty")
    values = np.asarray(acq(candidates) if callable(acq) else acq, dtype=float)
    if values.shape != (candidates.shape[0],):
        raise ValueError("one acquisition value per candidate required")
    if exclusion is not None and np.size(exclusion):
        exclusion = np.atleast_2d(np.asarray(exclusion, dtype=float))
        allowed = cdist(candidates, exclusion).min(axis=1) > dedupe_radius
        if np.any(allowed):
            masked = np.where(allowed, values, -np.inf)
            return candidates[int(np.argmax(masked))].copy()
    return candidates[int(np.argmax(values))].copy()
