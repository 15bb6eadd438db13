"""Trust-region placement by maximizing a region-averaged acquisition.

At initialization or after a region collapses, a global GP is fitted on all
archived samples (capped by representative-point selection) and a new region
center is chosen by maximizing a regional acquisition over the whole cube.
The selected region is then seeded with its center plus low-discrepancy
interior points, all evaluated here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .acquisition import log_expected_improvement, ucb_min
from .errors import ConfigurationError, ModelFitError
from .gp import FitConfig, GpModel, fit_map
from .optim import MultiStartConfig, maximize_smooth
from .problems import Dataset, sobol_points
from .regional import (
    RegionalAcqSpec,
    RegionGeometry,
    log_regional_ei_batch,
    q_regional_ei_batch,
    q_regional_ei_joint_batch,
    region_bounds,
    regional_ucb_batch,
    shaped_lengths,
)
from .subset import select_representatives

logger = logging.getLogger(__name__)

SELECTORS = ("qrei", "logrei", "rucb", "logei", "ucb")


@dataclass(frozen=True)
class SelectionSettings:
    n_init: int = 30
    length_init: float = 0.8
    length_max: float = 1.6
    selector: str = "qrei"
    n_x: int = 128
    n_f: int = 256
    ucb_beta: float = 4.0
    n_gp_cap: int = 500
    shape_lengths: bool = True     # scale per-dim lengths by the global ARD lengthscales
    inner: MultiStartConfig = field(default_factory=lambda: MultiStartConfig(max_iters=30))
    fit_restarts: int = 8
    fit_max_iter: int = 100

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ConfigurationError(f"unknown selector {self.selector!r}; choose from {SELECTORS}")


@dataclass
class SelectionResult:
    center: np.ndarray
    points: np.ndarray            # (n, D); center first unless the random fallback ran
    values: np.ndarray
    acq_value: Optional[float]
    used_fallback: bool


@dataclass
class ProposedRegion:
    """Outcome of the center search, before any objective evaluation."""

    center: np.ndarray
    lengths: np.ndarray
    acq_value: float
    model: GpModel
    mc: Optional[RegionalAcqSpec]   # None for the pointwise selectors
    point_seed: int


def _fit_global_model(data: Dataset, settings: SelectionSettings, seed: int) -> GpModel:
    fit_data = data
    if len(data) > settings.n_gp_cap:
        idx = select_representatives(data, settings.n_gp_cap)
        fit_data = data.subset(idx)
    return fit_map(
        fit_data,
        FitConfig(n_restarts=settings.fit_restarts, max_iter=settings.fit_max_iter, seed=seed),
    )


def _center_objective(
    model: GpModel,
    lengths: np.ndarray,
    best_f: float,
    settings: SelectionSettings,
    mc: RegionalAcqSpec,
    point_seed: int,
) -> Callable[[np.ndarray], np.ndarray]:
    sel = settings.selector
    if sel == "qrei":
        return lambda c: q_regional_ei_batch(model, c, lengths, best_f, mc)
    if sel == "logrei":
        return lambda c: log_regional_ei_batch(model, c, lengths, best_f, settings.n_x, point_seed)
    if sel == "rucb":
        return lambda c: regional_ucb_batch(model, c, lengths, settings.ucb_beta, settings.n_x, point_seed)
    if sel == "logei":

        def point_logei(c):
            mean, var = model.posterior(c)
            return log_expected_improvement(mean, var, best_f)

        return point_logei

    def point_ucb(c):
        mean, var = model.posterior(c)
        return ucb_min(mean, var, settings.ucb_beta)

    return point_ucb


def propose_center(data: Dataset, settings: SelectionSettings, seed: int) -> ProposedRegion:
    """Fit the global model and maximize the selector over the cube.

    Raises ModelFitError when the global fit fails.
    """
    seeds = np.random.SeedSequence(seed).generate_state(4)
    model = _fit_global_model(data, settings, int(seeds[0] % (2**31 - 1)))
    dim = data.dim
    if settings.shape_lengths:
        lengths = shaped_lengths(settings.length_init, model.hyperparams.lengthscales, settings.length_max)
    else:
        lengths = np.full(dim, settings.length_init)
    best_f = model.best_f()
    mc = RegionalAcqSpec(
        n_x=settings.n_x, n_f=settings.n_f, base_sample_seed=int(seeds[1] % (2**31 - 1))
    )
    objective = _center_objective(model, lengths, best_f, settings, mc, mc.point_seed(0))
    bounds = (np.zeros(dim), np.ones(dim))
    center, value = maximize_smooth(objective, bounds, settings.inner, int(seeds[2] % (2**31 - 1)))
    return ProposedRegion(
        center=center,
        lengths=lengths,
        acq_value=value,
        model=model,
        mc=mc if settings.selector == "qrei" else None,
        point_seed=mc.point_seed(0),
    )


def interior_points(center: np.ndarray, lengths: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy points inside the clipped region box."""
    lower, upper = region_bounds(RegionGeometry(center, lengths))
    return lower + sobol_points(count, center.size, seed) * (upper - lower)


def _random_result(dim: int, n: int, objective, seed: int) -> SelectionResult:
    pts = sobol_points(n, dim, seed)
    vals = np.array([objective(p) for p in pts])
    best = int(np.argmin(vals))
    return SelectionResult(
        center=pts[best].copy(), points=pts, values=vals, acq_value=None, used_fallback=True
    )


def select_trust_region(
    global_data: Dataset,
    objective,
    settings: SelectionSettings,
    seed: int,
) -> SelectionResult:
    """Pick a fresh trust region and evaluate its initial samples.

    With no archived data this degenerates to plain random initialization
    over the cube.  A global model-fit failure also falls back to random
    initialization, with a warning.  Otherwise the returned samples are the
    selected center (evaluated first) plus n-1 interior points, and exactly
    ``settings.n_init`` objective evaluations are spent.
    """
    seeds = np.random.SeedSequence(seed).generate_state(3)
    n = settings.n_init
    if len(global_data) == 0:
        return _random_result(global_data.dim, n, objective, int(seeds[0] % (2**31 - 1)))
    try:
        proposal = propose_center(global_data, settings, int(seeds[1]))
    except ModelFitError as exc:
        logger.warning("global model fit failed (%s); selecting a region at random", exc)
        return _random_result(global_data.dim, n, objective, int(seeds[0] % (2**31 - 1)))
    center = proposal.center
    values = [float(objective(center))]
    pts = [center]
    if n > 1:
        extra = interior_points(center, proposal.lengths, n - 1, int(seeds[2] % (2**31 - 1)))
        for p in extra:
            pts.append(p)
            values.append(float(objective(p)))
    return SelectionResult(
        center=center,
        points=np.array(pts),
        values=np.array(values),
        acq_value=proposal.acq_value,
        used_fallback=False,
    )


def propose_centers_joint(
    data: Dataset, settings: SelectionSettings, m: int, seed: int
) -> tuple[list[np.ndarray], np.ndarray, float]:
    """Place m region centers jointly under the MC regional improvement.

    Centers are chosen sequentially, then refined coordinate-wise until each
    one is the argmax of the joint score given the others fixed (or the sweep
    limit is reached).  Only the ``qrei`` selector supports joint scoring.
    """
    if settings.selector != "qrei":
        raise ConfigurationError("joint region placement requires the qrei selector")
    seeds = np.random.SeedSequence(seed).generate_state(2 + 3 * m)
    model = _fit_global_model(data, settings, int(seeds[0] % (2**31 - 1)))
    dim = data.dim
    if settings.shape_lengths:
        lengths = shaped_lengths(settings.length_init, model.hyperparams.lengthscales, settings.length_max)
    else:
        lengths = np.full(dim, settings.length_init)
    best_f = model.best_f()
    mc = RegionalAcqSpec(
        n_x=settings.n_x, n_f=settings.n_f, q=m, base_sample_seed=int(seeds[1] % (2**31 - 1))
    )
    bounds = (np.zeros(dim), np.ones(dim))

    centers: list[np.ndarray] = []
    value = 0.0
    for i in range(m):
        fixed = [RegionGeometry(c, lengths) for c in centers]

        def objective(cand, _fixed=fixed):
            return q_regional_ei_joint_batch(model, _fixed, cand, lengths, best_f, mc)

        c, value = maximize_smooth(objective, bounds, settings.inner, int(seeds[2 + i] % (2**31 - 1)))
        centers.append(c)

    # coordinate ascent to a fixed point: each accepted move strictly raises
    # the (slot-invariant) joint score, so this terminates
    for sweep in range(8):
        changed = False
        for i in range(m):
            others = [RegionGeometry(centers[j], lengths) for j in range(m) if j != i]

            def objective(cand, _fixed=others):
                return q_regional_ei_joint_batch(model, _fixed, cand, lengths, best_f, mc)

            current = float(objective(centers[i][None, :])[0])
            c, v = maximize_smooth(
                objective, bounds, settings.inner, int(seeds[2 + m + i] % (2**31 - 1))
            )
            if v > current + 1e-12:
                centers[i] = c
                value = v
                changed = True
        if not changed:
            break
    return centers, lengths, value
