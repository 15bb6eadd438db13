"""Pointwise acquisition functions for minimization on a GP posterior.

All arithmetic happens in standardized objective space.  ``best_f`` is the
incumbent: the smallest standardized value of the dataset in scope.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _norm_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def expected_improvement(mean, variance, best_f):
    """EI for minimization: (best - mu) * Phi(z) + sigma * phi(z), z = (best - mu)/sigma.

    Zero-variance inputs reduce to max(best - mu, 0).
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    sigma = np.sqrt(np.maximum(variance, 0.0))
    diff = best_f - mean
    out = np.where(sigma > 0.0, 1.0, np.maximum(diff, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, diff / np.where(sigma > 0.0, sigma, 1.0), 0.0)
        ei = diff * ndtr(z) + sigma * _norm_pdf(z)
    out = np.where(sigma > 0.0, ei, out)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _log_h(z):
    """log(phi(z) + z * Phi(z)) without underflow for very negative z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)

    direct = z >= -6.0
    if np.any(direct):
        zd = z[direct]
        out[direct] = np.log(_norm_pdf(zd) + zd * ndtr(zd))

    mid = (~direct) & (z > -35.0)
    if np.any(mid):
        zm = z[mid]
        # Phi(z) = 0.5 * erfcx(-z/sqrt2) * exp(-z^2/2) for z < 0
        inner = _INV_SQRT_2PI + 0.5 * zm * erfcx(-zm / math.sqrt(2.0))
        out[mid] = -0.5 * zm**2 + np.log(inner)

    tail = z <= -35.0
    if np.any(tail):
        zt = z[tail]
        zi2 = zt**-2
        series = np.log1p(zi2 * (-3.0 + zi2 * (15.0 + zi2 * (-105.0 + 945.0 * zi2))))
        out[tail] = -0.5 * zt**2 - _LOG_SQRT_2PI - 2.0 * np.log(-zt) + series
    return out


def log_expected_improvement(mean, variance, best_f):
    """Numerically stable log of `expected_improvement`.

    Agrees with log(EI) to high relative accuracy wherever EI is
    representable and stays finite far into the no-improvement tail, where EI
    itself underflows to zero.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    sigma = np.sqrt(np.maximum(variance, 0.0))
    diff = best_f - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, diff / np.where(sigma > 0.0, sigma, 1.0), 0.0)
        value = np.where(sigma > 0.0, np.log(np.where(sigma > 0.0, sigma, 1.0)) + _log_h(z), 0.0)
        degenerate = np.where(diff > 0.0, np.log(np.maximum(diff, 1e-300)), -np.inf)
    out = np.where(sigma > 0.0, value, degenerate)
    return float(out) if out.ndim == 0 else out


def log_expected_improvement_grad(mean, variance, best_f):
    """Gradient of log EI w.r.t. (mean, sigma); requires variance > 0.

    d/dmu  = -Phi(z) / (sigma * h(z))
    d/dsigma =  phi(z) / (sigma * h(z))
    """
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.asarray(variance, dtype=float))
    if np.any(sigma <= 0.0):
        raise ValueError("gradient undefined at zero variance")
    z = (best_f - mean) / sigma
    log_h = _log_h(z)
    d_mean = -np.exp(log_ndtr(z) - log_h) / sigma
    d_sigma = np.exp(-0.5 * z**2 - _LOG_SQRT_2PI - log_h) / sigma
    if d_mean.ndim == 0:
        return float(d_mean), float(d_sigma)
    return d_mean, d_sigma


def ucb_min(mean, variance, beta: float):
    """Minimization-form confidence bound: -mean + sqrt(beta * variance)."""
    if beta < 0.0:
        raise ValueError("beta must be non-negative")
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    out = -mean + np.sqrt(beta * np.maximum(variance, 0.0))
    return float(out) if out.ndim == 0 else out


def batch_improvement(draws: np.ndarray, best_f: float) -> float:
    """Monte-Carlo batch improvement over posterior draws.

    ``draws`` has shape (n_draws, q); each draw is scored by its best (lowest)
    point, so q = 1 reduces to a plain MC estimate of EI.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    lowest = np.min(draws, axis=1)
    return float(np.mean(np.maximum(best_f - lowest, 0.0)))
