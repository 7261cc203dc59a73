"""Synthetic test functions in maximization convention.

Every benchmark wraps the standard minimization form g as f = -g, so the
known minima become known maxima (f* = -g_min).  The optimizer works on the
unit cube; each benchmark carries the affine map to and from its native box.
Embedded variants lift a low-dimensional function into a larger box where
only the first ``effective_dim`` coordinates matter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Benchmark",
    "embed",
    "get_benchmark",
    "benchmark_names",
]


@dataclass(frozen=True)
class Benchmark:
    """A box-constrained maximization problem with a known optimum."""

    name: str
    dim: int
    effective_dim: int
    lower: np.ndarray
    upper: np.ndarray
    optimum_value: float
    optimum_location: np.ndarray | None
    fn: Callable[[np.ndarray], float]

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
            raise ValueError(f"bounds must have shape ({self.dim},)")
        if np.any(self.upper <= self.lower):
            raise ValueError("upper bounds must exceed lower bounds")
        if self.effective_dim < 1 or self.effective_dim > self.dim:
            raise ValueError("effective_dim must lie in [1, dim]")

    def _check_inside(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"{self.name} expects a point of dimension {self.dim}, got shape {x.shape}"
            )
        tol = 1e-9 * (self.upper - self.lower)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            raise ValueError(f"point {x} outside the {self.name} box")
        return x

    def evaluate(self, x) -> float:
        """Noiseless maximization value at a native-box point."""
        x = self._check_inside(x)
        return float(self.fn(x[: self.effective_dim]))

    def observe(self, x, noise_variance: float, rng: np.random.Generator) -> float:
        """Noisy observation: evaluate(x) + N(0, noise_variance)."""
        value = self.evaluate(x)
        if noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        if noise_variance == 0:
            return value
        return value + rng.normal(0.0, np.sqrt(noise_variance))

    def to_unit(self, x) -> np.ndarray:
        """Map a native-box point to the unit cube."""
        x = np.asarray(x, dtype=float)
        return (x - self.lower) / (self.upper - self.lower)

    def from_unit(self, u) -> np.ndarray:
        """Map a unit-cube point to the native box."""
        u = np.asarray(u, dtype=float)
        return self.lower + u * (self.upper - self.lower)


def embed(base: Benchmark, dim: int) -> Benchmark:
    """Lift a benchmark into ``dim`` dimensions; trailing coordinates are inert.

    Dummy dimensions get [0, 1] bounds.  The value depends only on the first
    ``effective_dim`` native coordinates, so the optimum is unchanged.
    """
    d_eff = base.effective_dim
    if dim < d_eff:
        raise ValueError(f"target dimension {dim} below effective dimension {d_eff}")
    if dim == base.dim:
        return base
    lower = np.concatenate([base.lower[:d_eff], np.zeros(dim - d_eff)])
    upper = np.concatenate([base.upper[:d_eff], np.ones(dim - d_eff)])
    location = None
    if base.optimum_location is not None:
        location = np.concatenate([base.optimum_location[:d_eff], np.zeros(dim - d_eff)])
    return Benchmark(
        name=f"{base.name}_{dim}",
        dim=dim,
        effective_dim=d_eff,
        lower=lower,
        upper=upper,
        optimum_value=base.optimum_value,
        optimum_location=location,
        fn=base.fn,
    )


# ---------------------------------------------------------------------------
# Function definitions (maximization values of the negated standard forms)
# ---------------------------------------------------------------------------

_LANGERMANN_A = np.array(
    [[3.0, 5.0], [5.0, 2.0], [2.0, 1.0], [1.0, 4.0], [7.0, 9.0]]
)
_LANGERMANN_C = np.array([1.0, 2.0, 5.0, 2.0, 3.0])

# Maximum of the m=5 Langermann configuration above, established by a 400x400
# grid over [0,10]^2 followed by Nelder-Mead refinement (not taken from any
# table).  tests/test_benchmarks.py re-runs that search.
_LANGERMANN_MAX = 5.162126159963983
_LANGERMANN_ARGMAX = np.array([2.00299212, 1.00609594])


def _langermann(x: np.ndarray) -> float:
    r2 = ((x[None, :] - _LANGERMANN_A) ** 2).sum(axis=1)
    return float(np.sum(_LANGERMANN_C * np.exp(-r2 / np.pi) * np.cos(np.pi * r2)))


_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)
_HARTMANN6_C = np.array([1.0, 1.2, 3.0, 3.2])

_HARTMANN6_MAX = 3.3223680114155147
_HARTMANN6_ARGMAX = np.array(
    [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573]
)


def _hartmann6(x: np.ndarray) -> float:
    inner = (_HARTMANN6_A * (x[None, :] - _HARTMANN6_P) ** 2).sum(axis=1)
    return float(np.sum(_HARTMANN6_C * np.exp(-inner)))


def _griewank(x: np.ndarray) -> float:
    i = np.arange(1, x.size + 1)
    g = np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0
    return float(-g)


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    return float(-(head + mid + tail))


def _rosenbrock(x: np.ndarray) -> float:
    g = np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2)
    return float(-g)


def _make_langermann2() -> Benchmark:
    return Benchmark(
        name="langermann2",
        dim=2,
        effective_dim=2,
        lower=np.zeros(2),
        upper=np.full(2, 10.0),
        optimum_value=_LANGERMANN_MAX,
        optimum_location=_LANGERMANN_ARGMAX.copy(),
        fn=_langermann,
    )


def _make_hartmann6() -> Benchmark:
    return Benchmark(
        name="hartmann6",
        dim=6,
        effective_dim=6,
        lower=np.zeros(6),
        upper=np.ones(6),
        optimum_value=_HARTMANN6_MAX,
        optimum_location=_HARTMANN6_ARGMAX.copy(),
        fn=_hartmann6,
    )


def _make_griewank(dim: int) -> Benchmark:
    return Benchmark(
        name=f"griewank{dim}",
        dim=dim,
        effective_dim=dim,
        lower=np.full(dim, -600.0),
        upper=np.full(dim, 600.0),
        optimum_value=0.0,
        optimum_location=np.zeros(dim),
        fn=_griewank,
    )


def _make_levy(dim: int) -> Benchmark:
    return Benchmark(
        name=f"levy{dim}",
        dim=dim,
        effective_dim=dim,
        lower=np.full(dim, -10.0),
        upper=np.full(dim, 10.0),
        optimum_value=0.0,
        optimum_location=np.ones(dim),
        fn=_levy,
    )


def _make_rosenbrock(dim: int) -> Benchmark:
    return Benchmark(
        name=f"rosenbrock{dim}",
        dim=dim,
        effective_dim=dim,
        lower=np.full(dim, -5.0),
        upper=np.full(dim, 10.0),
        optimum_value=0.0,
        optimum_location=np.ones(dim),
        fn=_rosenbrock,
    )


_REGISTRY: dict[str, Callable[[], Benchmark]] = {
    "langermann2": _make_langermann2,
    "hartmann6": _make_hartmann6,
    "griewank6": lambda: _make_griewank(6),
    "levy8": lambda: _make_levy(8),
    "levy4": lambda: _make_levy(4),
    "rosenbrock10": lambda: _make_rosenbrock(10),
}

_EMBED_PATTERN = re.compile(r"^([a-z]+\d+)_(\d+)$")


def benchmark_names() -> list[str]:
    """Registered base benchmark ids (embedded ids follow '<base>_<dim>')."""
    return sorted(_REGISTRY)


def get_benchmark(name: str) -> Benchmark:
    """Look up a benchmark by id, e.g. 'hartmann6' or embedded 'levy4_1000'."""
    key = name.strip().lower()
    if key in _REGISTRY:
        return _REGISTRY[key]()
    match = _EMBED_PATTERN.match(key)
    if match and match.group(1) in _REGISTRY:
        return embed(_REGISTRY[match.group(1)](), int(match.group(2)))
    raise KeyError(
        f"unknown benchmark {name!r}; known ids: {', '.join(benchmark_names())} "
        "plus embedded variants like 'levy4_100'"
    )
