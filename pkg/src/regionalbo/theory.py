"""Numerical checks of the smoothing effect of region averaging.

Averaging a function over a box is a convolution with a normalized indicator;
in Fourier space this multiplies each mode by a product of sinc factors of
magnitude at most one, so the kernel-weighted (RKHS) norm can only shrink.
The continuum statement is not desk-computable, so it is exercised exactly on
periodic one-dimensional grids, where Fourier sums are finite and the norm of
a kernel-translate sum is the explicit quadratic form alpha' K alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_SQRT5 = math.sqrt(5.0)


def region_average_mc(f_extended, x: np.ndarray, lengths: np.ndarray, n_mc: int, seed: int) -> float:
    """MC estimate of the uniform average of f over the box centered at x.

    ``f_extended`` must accept an (n, D) batch and return (n,) values; it is
    the caller's extension of the objective beyond the unit cube.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
    rng = np.random.default_rng(seed)
    u = rng.uniform(-lengths / 2.0, lengths / 2.0, size=(int(n_mc), x.size))
    return float(np.mean(f_extended(x[None, :] + u)))


def indicator_fourier_factor(omega, lengths) -> float | np.ndarray:
    """Fourier transform of the normalized box indicator: a product of sincs.

    Equals prod_i sin(w_i l_i / 2) / (w_i l_i / 2), with value 1 at w_i = 0;
    its magnitude never exceeds 1.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
    # np.sinc(t) = sin(pi t)/(pi t), so t = w*l/(2*pi) gives sin(w l/2)/(w l/2)
    factors = np.sinc(omega * lengths / (2.0 * math.pi))
    out = np.prod(factors, axis=-1)
    return float(out) if out.ndim == 0 else out


def _lift_to_positive(row: np.ndarray) -> np.ndarray:
    """Add the smallest diagonal nugget making all spectral weights positive.

    Truncating a smooth kernel to one period leaves spectral leakage in the
    far tail that can dip slightly negative; the lift is a white-noise
    component far below the kernel scale.  A lift above 1e-3 would mean the
    row is not close to a valid periodic kernel, so that stays an error.
    """
    weights = np.real(np.fft.fft(row))
    lowest = float(weights.min())
    lift = max(1e-10, 1e-10 - lowest if lowest <= 0.0 else 1e-10)
    if lift > 1e-3:
        raise ConfigurationError("kernel row is far from positive definite on the grid")
    out = row.copy()
    out[0] += lift
    return out


def matern52_grid_row(m: int, lengthscale: float) -> np.ndarray:
    """First row of the circulant Matern-5/2 Gram matrix on an m-point periodic grid."""
    d = np.minimum(np.arange(m), m - np.arange(m)) / m
    r = d / lengthscale
    return _lift_to_positive((1.0 + _SQRT5 * r + 5.0 * r**2 / 3.0) * np.exp(-_SQRT5 * r))


def gaussian_grid_row(m: int, lengthscale: float) -> np.ndarray:
    d = np.minimum(np.arange(m), m - np.arange(m)) / m
    return _lift_to_positive(np.exp(-0.5 * (d / lengthscale) ** 2))


@dataclass(frozen=True)
class GridFunction1D:
    """Kernel-translate sum on a periodic grid of M points over [0, 1).

    values[j] = sum_i alpha[i] * k((j - i)/M); the spectral weights are the
    DFT of the kernel row and must be strictly positive for the grid kernel
    to be a valid covariance.
    """

    values: np.ndarray
    alpha: np.ndarray
    kernel_row: np.ndarray
    spectral_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return 1.0 / self.values.size


def grid_function(kernel_row: np.ndarray, alpha: np.ndarray) -> GridFunction1D:
    kernel_row = np.asarray(kernel_row, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    m = kernel_row.size
    if alpha.size != m:
        raise ValueError("alpha and kernel_row must have equal length")
    if m & (m - 1):
        raise ConfigurationError("grid size must be a power of two")
    weights = np.real(np.fft.fft(kernel_row))
    if np.any(weights <= 0.0):
        raise ConfigurationError(
            "kernel discretization has non-positive spectral weight; shorten the lengthscale"
        )
    values = np.real(np.fft.ifft(np.fft.fft(kernel_row) * np.fft.fft(alpha)))
    return GridFunction1D(values=values, alpha=alpha, kernel_row=kernel_row, spectral_weights=weights)


def _indicator_window(m: int, length: float) -> np.ndarray:
    """Normalized symmetric box window of odd width covering ``length``."""
    width = 2 * int(round(length * m / 2.0 - 0.5)) + 1
    width = max(1, min(width, m if m % 2 else m - 1))
    chi = np.zeros(m)
    half = width // 2
    for offset in range(-half, half + 1):
        chi[offset % m] = 1.0 / width
    return chi


@dataclass(frozen=True)
class NormReductionResult:
    norm_f: float
    norm_sf: float
    passed: bool

    @property
    def ratio(self) -> float:
        return self.norm_sf / self.norm_f if self.norm_f > 0 else 0.0


def discrete_norm_reduction_check(f: GridFunction1D, length: float) -> NormReductionResult:
    """Compare the grid RKHS norm of f with that of its box average.

    ||f||^2 is the quadratic form alpha' K alpha; the averaged function's norm
    comes from the spectral formula sum |Ff|^2 |Fchi|^2 / weights, and must
    not exceed ||f||.
    """
    m = f.size
    norm_f_sq = float(f.alpha @ f.values)
    chi = _indicator_window(m, length)
    f_hat = np.fft.fft(f.values)
    chi_hat = np.fft.fft(chi)
    norm_sf_sq = float(np.real(np.sum(np.abs(f_hat * chi_hat) ** 2 / f.spectral_weights)) / m)
    norm_f = math.sqrt(max(norm_f_sq, 0.0))
    norm_sf = math.sqrt(max(norm_sf_sq, 0.0))
    return NormReductionResult(
        norm_f=norm_f, norm_sf=norm_sf, passed=norm_sf <= norm_f * (1.0 + 1e-8)
    )


def averaged_grid_values(f: GridFunction1D, length: float) -> np.ndarray:
    """The box-averaged grid function itself (circular convolution with the window)."""
    chi = _indicator_window(f.size, length)
    return np.real(np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(chi)))


@dataclass(frozen=True)
class TheorySelfTest:
    n_frequencies: int
    max_abs_factor: float
    indicator_ok: bool
    norm_instances: int
    norm_passed: int
    worst_ratio: float

    @property
    def all_ok(self) -> bool:
        return self.indicator_ok and self.norm_passed == self.norm_instances


def run_selftest(n_frequencies: int = 100_000, n_instances: int = 100, seed: int = 0) -> TheorySelfTest:
    """Randomized verification: indicator factor bounded by 1, norms shrink."""
    rng = np.random.default_rng(seed)
    dims = rng.integers(1, 6, size=n_frequencies)
    max_abs = 0.0
    for d in np.unique(dims):
        count = int(np.sum(dims == d))
        omega = rng.uniform(-100.0, 100.0, size=(count, d))
        lengths = rng.uniform(0.05, 2.0, size=(count, d))
        vals = np.abs(np.prod(np.sinc(omega * lengths / (2.0 * math.pi)), axis=1))
        max_abs = max(max_abs, float(np.max(vals)))

    m = 256
    passed = 0
    worst = 0.0
    for _ in range(n_instances):
        lengthscale = float(rng.uniform(0.02, 0.12))
        row = matern52_grid_row(m, lengthscale) if rng.random() < 0.5 else gaussian_grid_row(m, lengthscale)
        alpha = rng.standard_normal(m) * (rng.random(m) < 0.1)
        if not np.any(alpha):
            alpha[int(rng.integers(0, m))] = 1.0
        f = grid_function(row, alpha)
        length = float(rng.choice([0.1, 0.3, 0.5]))
        result = discrete_norm_reduction_check(f, length)
        worst = max(worst, result.ratio)
        passed += int(result.passed)
    return TheorySelfTest(
        n_frequencies=n_frequencies,
        max_abs_factor=max_abs,
        indicator_ok=max_abs <= 1.0 + 1e-12,
        norm_instances=n_instances,
        norm_passed=passed,
        worst_ratio=worst,
    )
