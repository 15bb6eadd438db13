"""Optimization problems on the unit hypercube.

Every optimizer in this package works internally on the unit cube; a
:class:`DesignSpace` maps raw problem bounds onto it.  Objective values are
kept in raw problem units inside a :class:`Dataset` and standardized on
demand, since the GP assumes zero-mean unit-variance targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError, DegenerateDataError

# scipy's Sobol generator supports at most this many dimensions
_SOBOL_MAX_DIM = 21201


@dataclass(frozen=True)
class DesignSpace:
    """Raw box bounds of a problem; optimization itself runs on [0, 1]^D."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1 or lower.size == 0:
            raise ConfigurationError("bounds must be equal-length 1-D arrays")
        if np.any(lower >= upper):
            raise ConfigurationError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    def from_unit(self, x: np.ndarray) -> np.ndarray:
        """Map unit-cube coordinates to raw coordinates."""
        return self.lower + np.asarray(x, dtype=float) * (self.upper - self.lower)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)


class Dataset:
    """Evaluated sample points in [0, 1]^D with raw objective values."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self._points: list[np.ndarray] = []
        self._values: list[float] = []

    def __len__(self) -> int:
        return len(self._values)

    @property
    def points(self) -> np.ndarray:
        if not self._points:
            return np.empty((0, self.dim))
        return np.array(self._points)

    @property
    def values(self) -> np.ndarray:
        return np.array(self._values, dtype=float)

    def append(self, point: np.ndarray, value: float) -> None:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise ValueError(f"point must have shape ({self.dim},)")
        if np.any(point < 0.0) or np.any(point > 1.0):
            raise ValueError("points must lie inside the unit cube")
        self._points.append(point.copy())
        self._values.append(float(value))

    def extend(self, points: np.ndarray, values: np.ndarray) -> None:
        for p, v in zip(np.atleast_2d(points), np.atleast_1d(values)):
            self.append(p, v)

    def best_index(self) -> int:
        if not self._values:
            raise DegenerateDataError("dataset is empty")
        return int(np.argmin(self._values))

    def best_value(self) -> float:
        return self._values[self.best_index()]

    def best_point(self) -> np.ndarray:
        return self._points[self.best_index()].copy()

    def standardized(self) -> tuple[np.ndarray, float, float]:
        """Standardized values plus the (mean, stddev) used, recomputed on call."""
        if not self._values:
            raise DegenerateDataError("dataset is empty")
        return standardize(self.values)

    def subset(self, indices: np.ndarray) -> "Dataset":
        out = Dataset(self.dim)
        for i in indices:
            out.append(self._points[int(i)], self._values[int(i)])
        return out

    def copy(self) -> "Dataset":
        out = Dataset(self.dim)
        out._points = [p.copy() for p in self._points]
        out._values = list(self._values)
        return out


@dataclass(frozen=True)
class ObjectiveFn:
    """Deterministic objective on the unit cube.

    ``evaluator`` accepts a single unit-cube point and returns the raw
    objective value; ``space`` records the raw bounds used for reporting.
    """

    name: str
    dim: int
    evaluator: Callable[[np.ndarray], float] = field(repr=False)
    space: DesignSpace = field(repr=False)
    known_optimum: Optional[float] = None

    def __call__(self, x: np.ndarray) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float)))


def sobol_points(count: int, dim: int, seed: int) -> np.ndarray:
    """Scrambled low-discrepancy points in [0, 1]^dim, deterministic per seed."""
    if count < 1 or dim < 1:
        raise ConfigurationError("count and dim must be positive")
    if dim > _SOBOL_MAX_DIM:
        raise ConfigurationError(f"dim {dim} exceeds the Sobol generator limit {_SOBOL_MAX_DIM}")
    with warnings.catch_warnings():
        # non power-of-two draws are fine here; scrambling keeps them unbiased
        warnings.simplefilter("ignore", UserWarning)
        engine = qmc.Sobol(d=dim, scramble=True, seed=int(seed))
        pts = engine.random(int(count))
    return np.clip(pts, 0.0, 1.0)


def standardize(values) -> tuple[np.ndarray, float, float]:
    """Shift/scale values to mean 0 and population stddev 1.

    All-equal inputs fall back to stddev 1.0 so downstream models see a
    zero-mean constant target instead of a division by zero.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DegenerateDataError("cannot standardize an empty value list")
    mean = float(np.mean(values))
    std = float(np.std(values))
    if std <= 0.0 or not np.isfinite(std):
        std = 1.0
    return (values - mean) / std, mean, std


def unstandardize(z, mean: float, std: float) -> np.ndarray:
    return np.asarray(z, dtype=float) * std + mean


# ---------------------------------------------------------------------------
# synthetic benchmark functions
#
# Raw bounds are fixed here so CSV outputs are reproducible across machines:
#   ackley            [-32.768, 32.768]^D   min 0 at the origin
#   rastrigin         [-5.12, 5.12]^D       min 0 at the origin
#   rosenbrock        [-5, 10]^D            min 0 at (1, ..., 1)
#   levy              [-10, 10]^D           min 0 at (1, ..., 1)
#   styblinski_tang   [-5, 5]^D             min -39.166166...*D at (-2.9035...)^D
#   sharp_broad_1d    [0, 1]                1-D, one narrow deep valley plus one
#                                           broad shallower valley
# ---------------------------------------------------------------------------


def _ackley(x: np.ndarray) -> float:
    d = x.size
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2) / d))
        - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / d)
        + 20.0
        + np.e
    )


def _rastrigin(x: np.ndarray) -> float:
    return float(10.0 * x.size + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x)))


def _rosenbrock(x: np.ndarray) -> float:
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (x - 1.0) / 4.0
    term1 = np.sin(np.pi * w[0]) ** 2
    term3 = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    middle = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    return float(term1 + middle + term3)


def _styblinski_tang(x: np.ndarray) -> float:
    return float(0.5 * np.sum(x**4 - 16.0 * x**2 + 5.0 * x))


# Narrow valley: depth 1.3, width 0.035; broad valley: depth 1.0, width 0.13.
# The global minimum sits in the narrow valley; the broad valley carries far
# more low-value volume, which is exactly the two-basin landscape the regional
# acquisitions are designed to distinguish.  The narrow valley is kept wide
# enough that a small initial design usually registers its walls, and a mild
# short-scale ripple keeps fitted lengthscales short so sparsely sampled areas
# retain posterior uncertainty.
SHARP_VALLEY_CENTER = 0.25
SHARP_VALLEY_WIDTH = 0.035
SHARP_VALLEY_DEPTH = 1.3
BROAD_VALLEY_CENTER = 0.70
BROAD_VALLEY_WIDTH = 0.13
BROAD_VALLEY_DEPTH = 1.0
RIPPLE_AMPLITUDE = 0.08
RIPPLE_FREQUENCY = 6.0


def _sharp_broad_1d(x: np.ndarray) -> float:
    t = float(x[0])
    narrow = SHARP_VALLEY_DEPTH * np.exp(-0.5 * ((t - SHARP_VALLEY_CENTER) / SHARP_VALLEY_WIDTH) ** 2)
    broad = BROAD_VALLEY_DEPTH * np.exp(-0.5 * ((t - BROAD_VALLEY_CENTER) / BROAD_VALLEY_WIDTH) ** 2)
    ripple = RIPPLE_AMPLITUDE * np.cos(2.0 * np.pi * RIPPLE_FREQUENCY * t)
    return float(1.0 - narrow - broad + ripple)


_BENCHMARKS: dict[str, tuple[Callable[[np.ndarray], float], float, float, Optional[Callable[[int], float]]]] = {
    "ackley": (_ackley, -32.768, 32.768, lambda d: 0.0),
    "rastrigin": (_rastrigin, -5.12, 5.12, lambda d: 0.0),
    "rosenbrock": (_rosenbrock, -5.0, 10.0, lambda d: 0.0),
    "levy": (_levy, -10.0, 10.0, lambda d: 0.0),
    "styblinski_tang": (_styblinski_tang, -5.0, 5.0, lambda d: -39.16616570377142 * d),
    "sharp_broad_1d": (_sharp_broad_1d, 0.0, 1.0, None),
}


def benchmark_names() -> list[str]:
    return sorted(_BENCHMARKS)


def benchmark_suite(name: str, dim: int) -> ObjectiveFn:
    """Return a named synthetic benchmark mapped onto the unit cube."""
    if name not in _BENCHMARKS:
        raise ConfigurationError(f"unknown benchmark {name!r}; choose from {benchmark_names()}")
    if dim < 1:
        raise ConfigurationError("dim must be positive")
    raw_fn, lo, hi, optimum = _BENCHMARKS[name]
    if name == "sharp_broad_1d" and dim != 1:
        raise ConfigurationError("sharp_broad_1d is one-dimensional")
    if name == "rosenbrock" and dim < 2:
        raise ConfigurationError("rosenbrock needs dim >= 2")
    space = DesignSpace(np.full(dim, lo), np.full(dim, hi))

    def evaluator(x: np.ndarray, _raw=raw_fn, _space=space) -> float:
        return _raw(_space.from_unit(x))

    known = None
    if name == "sharp_broad_1d":
        # evaluated once at the narrow-valley floor; overlap with the broad
        # valley shifts it a hair away from 1 - depth
        known = _sharp_broad_1d(np.array([SHARP_VALLEY_CENTER]))
    elif optimum is not None:
        known = optimum(dim)
    return ObjectiveFn(name=name, dim=dim, evaluator=evaluator, space=space, known_optimum=known)
