"""Credit-weighted Bayesian optimization.

A GP-UCB optimizer whose acquisition is reweighted by per-observation
counterfactual credits, plus synthetic benchmarks and a regret harness.
"""

from .acquisition import AcquisitionSpec, beta_t
from .benchmarks import Benchmark, embed, get_benchmark
from .credit import CreditField, credit_weight, optimum_proxy
from .gp import GpPosterior, KernelParams, ObservationSet, fit_posterior
from .metrics import RegretTrace, ausr, regret_traces
from .optimizer import RunConfig, RunResult, run

__all__ = [
    "AcquisitionSpec",
    "Benchmark",
    "CreditField",
    "GpPosterior",
    "KernelParams",
    "ObservationSet",
    "RegretTrace",
    "RunConfig",
    "RunResult",
    "ausr",
    "beta_t",
    "credit_weight",
    "embed",
    "fit_posterior",
    "get_benchmark",
    "optimum_proxy",
    "regret_traces",
    "run",
]

__version__ = "0.1.0"
