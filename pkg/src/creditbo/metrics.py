"""Regret accounting: simple and cumulative regret traces and AUSR.

Simple regret tracks the gap between the true optimum and the best noiseless
value of any queried point so far; cumulative regret sums the instantaneous
gaps.  AUSR is the trapezoidal mean of the simple-regret trajectory and
summarizes a whole run in one number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RegretTrace", "AggregateStats", "regret_traces", "ausr", "aggregate"]


@dataclass(frozen=True)
class RegretTrace:
    """Per-iteration regret of one run (noiseless channel)."""

    simple: np.ndarray
    cumulative: np.ndarray
    ausr: float


@dataclass(frozen=True)
class AggregateStats:
    """Across-run statistics for a group of equal-length traces."""

    simple_mean: np.ndarray
    simple_stderr: np.ndarray
    cumulative_mean: np.ndarray
    cumulative_stderr: np.ndarray
    ausr_mean: float
    ausr_std: float
    count: int


def regret_traces(result, f_star: float) -> RegretTrace:
    """Build the regret trace of a run against the optimum reference f_star.

    ``result`` is anything with a ``true_values`` attribute (a RunResult) or a
    plain sequence of noiseless queried values.
    """
    values = np.asarray(getattr(result, "true_values", result), dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("need a non-empty 1-d sequence of true values")
    gap = f_star - values
    if np.min(gap) < -1e-9:
        raise ValueError(
            f"optimum reference {f_star} lies below an observed true value "
            f"{values.max()}; regret would be negative"
        )
    simple = f_star - np.maximum.accumulate(values)
    cumulative = np.cumsum(gap)
    # a single-point trace has no trapezoid to average
    summary = ausr(simple) if simple.size >= 2 else float("nan")
    return RegretTrace(simple=simple, cumulative=cumulative, ausr=summary)


def ausr(simple) -> float:
    """Trapezoidal mean of a simple-regret trajectory: sum of (r[t-1]+r[t])/2
    over steps, divided by T-1."""
    simple = np.asarray(simple, dtype=float)
    if simple.ndim != 1 or simple.size < 2:
        raise ValueError("AUSR needs at least two trace points")
    return float(np.trapezoid(simple) / (simple.size - 1))


def _mean_stderr(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    if rows.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])


def aggregate(traces: list[RegretTrace]) -> AggregateStats:
    """Element-wise mean and standard error across runs, plus AUSR mean/std."""
    if not traces:
        raise ValueError("no traces to aggregate")
    length = traces[0].simple.size
    for i, tr in enumerate(traces):
        if tr.simple.size != length or tr.cumulative.size != length:
            raise ValueError(f"trace {i} has a different length ({tr.simple.size} vs {length})")
    simples = np.stack([tr.simple for tr in traces])
    cums = np.stack([tr.cumulative for tr in traces])
    ausrs = np.array([tr.ausr for tr in traces])
    simple_mean, simple_se = _mean_stderr(simples)
    cum_mean, cum_se = _mean_stderr(cums)
    ausr_std = float(ausrs.std(ddof=1)) if ausrs.size > 1 else 0.0
    return AggregateStats(
        simple_mean=simple_mean,
        simple_stderr=simple_se,
        cumulative_mean=cum_mean,
        cumulative_stderr=cum_se,
        ausr_mean=float(ausrs.mean()),
        ausr_std=ausr_std,
        count=len(traces),
    )
