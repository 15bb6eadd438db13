"""Region-averaged acquisition functions over trust-region boxes.

A candidate region is a box around a center, clipped to the unit cube.  Its
score is the average of a pointwise acquisition over low-discrepancy points
inside the box; the Monte-Carlo variant scores joint posterior draws instead
of the analytic EI, which extends to scoring several regions at once.

All randomness is pinned by seeds carried in :class:`RegionalAcqSpec`, so a
score is a deterministic function of (model, geometry, spec) and can serve as
the objective of an inner optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .acquisition import expected_improvement, log_expected_improvement, ucb_min
from .errors import ModelFitError
from .gp import GpModel
from .problems import sobol_points


@dataclass(frozen=True)
class RegionGeometry:
    """Axis-aligned box: per-dimension lengths around a unit-cube center."""

    center: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        lengths = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        if lengths.size == 1 and center.size > 1:
            lengths = np.full(center.size, float(lengths[0]))
        if center.shape != lengths.shape:
            raise ValueError("center and lengths must have matching shapes")
        if np.any(lengths <= 0.0):
            raise ValueError("lengths must be positive")
        if np.any(center < 0.0) or np.any(center > 1.0):
            raise ValueError("center must lie in the unit cube")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return self.center.size


def region_bounds(geom: RegionGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Box intervals [max(c - l/2, 0), min(c + l/2, 1)] per dimension."""
    lower = np.maximum(geom.center - geom.lengths / 2.0, 0.0)
    upper = np.minimum(geom.center + geom.lengths / 2.0, 1.0)
    return lower, upper


def shaped_lengths(length: float, lengthscales: np.ndarray, length_max: float | None = None) -> np.ndarray:
    """Per-dimension side lengths scaled by ARD lengthscales.

    Each dimension gets length * s_d / geomean(s), so the box volume stays
    length^D before the optional per-dimension cap.
    """
    log_ls = np.log(np.asarray(lengthscales, dtype=float))
    out = length * np.exp(log_ls - np.mean(log_ls))
    if length_max is not None:
        out = np.minimum(out, length_max)
    return out


@dataclass(frozen=True)
class RegionalAcqSpec:
    """Monte-Carlo budgets and base-sample seeds for regional acquisitions."""

    n_x: int = 128            # points averaged inside each region
    n_f: int = 256            # posterior draws (MC variant only)
    q: int = 1                # regions scored jointly
    base_sample_seed: int = 0

    def __post_init__(self):
        if self.n_x < 1 or self.n_f < 1 or self.q < 1:
            raise ValueError("n_x, n_f and q must all be >= 1")

    def point_seed(self, region_index: int) -> int:
        ss = np.random.SeedSequence(entropy=self.base_sample_seed, spawn_key=(region_index,))
        return int(ss.generate_state(1)[0] % (2**31 - 1))

    def draw_seed(self) -> int:
        ss = np.random.SeedSequence(entropy=self.base_sample_seed, spawn_key=(999_983,))
        return int(ss.generate_state(1)[0] % (2**31 - 1))


def _region_points(geom: RegionGeometry, n_x: int, seed: int) -> np.ndarray:
    lower, upper = region_bounds(geom)
    u = sobol_points(n_x, geom.dim, seed)
    return lower + u * (upper - lower)


def regional_ei(model: GpModel, geom: RegionGeometry, best_f: float, n_x: int, seed: int) -> float:
    """Average EI over low-discrepancy points inside the region."""
    pts = _region_points(geom, n_x, seed)
    mean, var = model.posterior(pts)
    return float(np.mean(expected_improvement(mean, var, best_f)))


def log_regional_ei(model: GpModel, geom: RegionGeometry, best_f: float, n_x: int, seed: int) -> float:
    """log of the region-averaged EI, accumulated stably in log space."""
    pts = _region_points(geom, n_x, seed)
    mean, var = model.posterior(pts)
    log_ei = log_expected_improvement(mean, var, best_f)
    return float(logsumexp(log_ei) - np.log(n_x))


def regional_ucb(model: GpModel, geom: RegionGeometry, beta: float, n_x: int, seed: int) -> float:
    """Average minimization-form UCB over the region."""
    pts = _region_points(geom, n_x, seed)
    mean, var = model.posterior(pts)
    return float(np.mean(ucb_min(mean, var, beta)))


def _base_normals(spec: RegionalAcqSpec, n_points: int) -> np.ndarray:
    rng = np.random.default_rng(spec.draw_seed())
    return rng.standard_normal((spec.n_f, n_points))


def _factor_blocks(covs: np.ndarray, scale: float) -> np.ndarray:
    """Stacked Cholesky factors with shared jitter escalation."""
    eye = np.eye(covs.shape[-1])
    last = None
    for rel in (1e-12, 1e-10, 1e-8, 1e-6):
        try:
            return np.linalg.cholesky(covs + rel * scale * eye)
        except np.linalg.LinAlgError:
            last = rel
    raise ModelFitError(f"regional covariance factorization failed at jitter {last:.1e}")


def _candidate_blocks(centers: np.ndarray, lengths: np.ndarray, n_x: int, seed: int) -> np.ndarray:
    """Region points for each candidate center, shape (B, n_x, D)."""
    u = sobol_points(n_x, centers.shape[1], seed)
    lower = np.maximum(centers - lengths / 2.0, 0.0)
    upper = np.minimum(centers + lengths / 2.0, 1.0)
    return lower[:, None, :] + u[None, :, :] * (upper - lower)[:, None, :]


def q_regional_ei_batch(
    model: GpModel,
    centers: np.ndarray,
    lengths: np.ndarray,
    best_f: float,
    spec: RegionalAcqSpec,
) -> np.ndarray:
    """Single-region MC regional improvement at many candidate centers at once.

    The base points and base normal draws are shared across all centers
    (common random numbers), so this is the deterministic landscape a center
    optimizer can climb.
    """
    centers = np.atleast_2d(centers)
    lengths = np.asarray(lengths, dtype=float)
    blocks = _candidate_blocks(centers, lengths, spec.n_x, spec.point_seed(0))
    means, covs = model.posterior_cov_blocks(blocks)
    L = _factor_blocks(covs, model.hyperparams.signal_variance)
    Z = _base_normals(spec, spec.n_x)
    draws = means[:, None, :] + np.einsum("fm,bnm->bfn", Z, L)
    return np.maximum(best_f - draws, 0.0).mean(axis=(1, 2))


def q_regional_ei_joint_batch(
    model: GpModel,
    fixed_geoms: list[RegionGeometry],
    centers: np.ndarray,
    lengths: np.ndarray,
    best_f: float,
    spec: RegionalAcqSpec,
) -> np.ndarray:
    """Joint q-region score as a function of the last region's center.

    The fixed regions keep their own geometry; the candidate occupies the
    final slot.  Draw k scores point index j by the lowest value among the q
    paired points, rewarding candidates that cover improvement the fixed
    regions miss.
    """
    centers = np.atleast_2d(centers)
    if not fixed_geoms:
        return q_regional_ei_batch(model, centers, lengths, best_f, spec)
    B, _ = centers.shape
    q = len(fixed_geoms) + 1
    # all regions share one base point set, so the joint score is invariant
    # to slot order and coordinate ascent over centers is well defined
    fixed_pts = np.concatenate(
        [_region_points(g, spec.n_x, spec.point_seed(0)) for g in fixed_geoms], axis=0
    )
    cand = _candidate_blocks(centers, np.asarray(lengths, dtype=float), spec.n_x, spec.point_seed(0))
    blocks = np.concatenate([np.tile(fixed_pts, (B, 1, 1)), cand], axis=1)
    means, covs = model.posterior_cov_blocks(blocks)
    L = _factor_blocks(covs, model.hyperparams.signal_variance)
    Z = _base_normals(spec, blocks.shape[1])
    draws = means[:, None, :] + np.einsum("fm,bnm->bfn", Z, L)
    per_point = draws.reshape(B, spec.n_f, q, spec.n_x).min(axis=2)
    return np.maximum(best_f - per_point, 0.0).mean(axis=(1, 2))


def log_regional_ei_batch(
    model: GpModel,
    centers: np.ndarray,
    lengths: np.ndarray,
    best_f: float,
    n_x: int,
    seed: int,
) -> np.ndarray:
    """`log_regional_ei` at many candidate centers sharing one base point set."""
    centers = np.atleast_2d(centers)
    blocks = _candidate_blocks(centers, np.asarray(lengths, dtype=float), n_x, seed)
    B, m, d = blocks.shape
    mean, var = model.posterior(blocks.reshape(B * m, d))
    log_ei = log_expected_improvement(mean, var, best_f).reshape(B, m)
    return logsumexp(log_ei, axis=1) - np.log(n_x)


def regional_ucb_batch(
    model: GpModel,
    centers: np.ndarray,
    lengths: np.ndarray,
    beta: float,
    n_x: int,
    seed: int,
) -> np.ndarray:
    """`regional_ucb` at many candidate centers sharing one base point set."""
    centers = np.atleast_2d(centers)
    blocks = _candidate_blocks(centers, np.asarray(lengths, dtype=float), n_x, seed)
    B, m, d = blocks.shape
    mean, var = model.posterior(blocks.reshape(B * m, d))
    return ucb_min(mean, var, beta).reshape(B, m).mean(axis=1)


def q_regional_ei(
    model: GpModel,
    geoms: list[RegionGeometry] | tuple[RegionGeometry, ...],
    best_f: float,
    spec: RegionalAcqSpec,
) -> float:
    """Monte-Carlo regional improvement for one or several regions jointly."""
    geoms = list(geoms)
    if not geoms:
        raise ValueError("need at least one region")
    last = geoms[-1]
    out = q_regional_ei_joint_batch(
        model, geoms[:-1], last.center[None, :], last.lengths, best_f, spec
    )
    return float(out[0])
