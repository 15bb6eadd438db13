"""Trust-region optimization loops.

One trust region at a time (or m slots round-robin) is searched with a local
GP; the region grows after a streak of improvements, shrinks after a streak
of failures, and is abandoned once its base length falls below the minimum.
Fresh regions come either from random initialization or from the regional
acquisition selector.  A plain global-GP loop is included as the degenerate
no-trust-region configuration.

Every run is a sequential state machine: all randomness is drawn from one
seed stream in program order, so a (config, seed) pair pins the full record
stream bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .acquisition import log_expected_improvement, log_expected_improvement_grad
from .errors import ConfigurationError, ModelFitError
from .gp import FitConfig, GpModel, fit_map
from .optim import MultiStartConfig, maximize_smooth, ts_candidate_argmin_batch
from .problems import Dataset, ObjectiveFn, sobol_points
from .regional import RegionGeometry, region_bounds, shaped_lengths
from .selection import (
    SelectionResult,
    SelectionSettings,
    interior_points,
    propose_centers_joint,
    select_trust_region,
)
from .subset import select_representatives

ACQUISITIONS = ("logei", "ts")
REGION_MODES = ("random", "select", "select-restart")

EVENT_INIT = "init"
EVENT_LOCAL = "local"
EVENT_RESTART_SELECT = "restart-select"
EVENT_RESTART_INIT = "restart-init"


@dataclass
class RunRecord:
    """One objective evaluation in a run trace."""

    seed: int
    eval_index: int            # 1-based, contiguous
    point: np.ndarray
    value: float
    best_so_far: float
    region_id: int
    event: str


@dataclass
class TrustRegion:
    """State of one trust region: geometry, streak counters, local archive."""

    center: np.ndarray
    length: float
    data: Dataset
    success_count: int = 0
    failure_count: int = 0
    status: str = "active"     # active | collapsed
    # model cache; conditioning tracks the data, hyperparameters are refit on
    # a schedule (see _Runner._ensure_model)
    model: Optional[GpModel] = field(default=None, repr=False)
    evals_since_refit: int = 0


@dataclass
class TurboConfig:
    """Loop parameters; defaults follow the standard trust-region settings."""

    budget: int
    n_init: int = 30
    batch_size: int = 1
    acquisition: str = "logei"
    region_mode: str = "random"
    selector: str = "qrei"
    length_init: float = 0.8
    length_min: float = 0.5**7
    length_max: float = 1.6
    success_tolerance: int = 10
    failure_tolerance: Optional[int] = None     # None: use the problem dimension
    n_x: int = 128
    n_f: int = 256
    ucb_beta: float = 4.0
    n_ts_candidates: Optional[int] = None
    inner: MultiStartConfig = field(default_factory=MultiStartConfig)
    select_inner: MultiStartConfig = field(default_factory=lambda: MultiStartConfig(max_iters=30))
    fit_restarts: int = 8
    refit_restarts: int = 2
    fit_max_iter: int = 100
    n_gp_cap: int = 500
    subset_local: bool = False
    shape_selection_lengths: bool = True

    def __post_init__(self):
        if not (0.0 < self.length_min < self.length_init <= self.length_max):
            raise ConfigurationError("need 0 < length_min < length_init <= length_max")
        if self.acquisition not in ACQUISITIONS:
            raise ConfigurationError(f"unknown acquisition {self.acquisition!r}")
        if self.region_mode not in REGION_MODES:
            raise ConfigurationError(f"unknown region mode {self.region_mode!r}")
        if self.budget < self.n_init:
            raise ConfigurationError("budget must cover the initial samples")
        if self.batch_size < 1 or self.n_init < 1:
            raise ConfigurationError("batch_size and n_init must be positive")
        if self.batch_size > 1 and self.acquisition != "ts":
            raise ConfigurationError("batches above size 1 are only supported with ts")

    def resolved_failure_tolerance(self, dim: int) -> int:
        return self.failure_tolerance if self.failure_tolerance is not None else dim

    def selection_settings(self) -> SelectionSettings:
        return SelectionSettings(
            n_init=self.n_init,
            length_init=self.length_init,
            length_max=self.length_max,
            selector=self.selector,
            n_x=self.n_x,
            n_f=self.n_f,
            ucb_beta=self.ucb_beta,
            n_gp_cap=self.n_gp_cap,
            shape_lengths=self.shape_selection_lengths,
            inner=self.select_inner,
            fit_restarts=self.fit_restarts,
            fit_max_iter=self.fit_max_iter,
        )


def per_dim_lengths(length: float, lengthscales: np.ndarray, length_max: Optional[float] = None) -> np.ndarray:
    """Side length per dimension, volume-preserving before the cap."""
    return shaped_lengths(length, lengthscales, length_max)


def update_trust_region(
    tr: TrustRegion,
    new_value: float,
    prev_best: float,
    new_point: np.ndarray,
    cfg: TurboConfig,
) -> TrustRegion:
    """Apply one success/failure update; collapses the region below length_min.

    An improvement over ``prev_best`` moves the center to ``new_point`` and
    extends the success streak; otherwise the failure streak grows.  A full
    streak doubles (capped) or halves the base length and resets its counter.
    """
    if tr.status != "active":
        raise ValueError("cannot update a collapsed trust region")
    if new_value < prev_best:
        tr.success_count += 1
        tr.failure_count = 0
        tr.center = np.asarray(new_point, dtype=float).copy()
    else:
        tr.failure_count += 1
        tr.success_count = 0
    if tr.success_count >= cfg.success_tolerance:
        tr.length = min(2.0 * tr.length, cfg.length_max)
        tr.success_count = 0
    elif tr.failure_count >= cfg.resolved_failure_tolerance(tr.center.size):
        tr.length = tr.length / 2.0
        tr.failure_count = 0
    if tr.length < cfg.length_min:
        tr.status = "collapsed"
    return tr


def _refit_period(n: int) -> int:
    # hyperparameters are re-optimized every call while the archive is small,
    # then on a stride; conditioning on new data always happens immediately
    return 1 if n <= 60 else 5


def _logei_objective(model: GpModel, best_f: float):
    def objective(X):
        mean, var = model.posterior(X)
        return log_expected_improvement(mean, var, best_f)

    def gradient(X):
        out = np.zeros_like(X)
        for i, x in enumerate(X):
            mean, var, dmean, dvar = model.posterior_with_grad(x)
            if var <= 0.0:
                continue
            d_mean, d_sigma = log_expected_improvement_grad(mean, var, best_f)
            out[i] = d_mean * dmean + d_sigma * dvar / (2.0 * np.sqrt(var))
        return out

    return objective, gradient


class _Runner:
    def __init__(self, objective: ObjectiveFn, cfg: TurboConfig, seed: int):
        self.objective = objective
        self.cfg = cfg
        self.seed = int(seed)
        self.rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        self.data = Dataset(objective.dim)
        self.records: list[RunRecord] = []
        self.best = np.inf

    # -- bookkeeping ------------------------------------------------------

    def next_seed(self) -> int:
        return int(self.rng.integers(2**31 - 1))

    @property
    def remaining(self) -> int:
        return self.cfg.budget - len(self.data)

    def evaluate(self, point: np.ndarray, region_id: int, event: str) -> float:
        point = np.asarray(point, dtype=float)
        value = self.objective(point)
        self.best = min(self.best, value)
        self.data.append(point, value)
        self.records.append(
            RunRecord(
                seed=self.seed,
                eval_index=len(self.records) + 1,
                point=point.copy(),
                value=value,
                best_so_far=self.best,
                region_id=region_id,
                event=event,
            )
        )
        return value

    def _selection_proxy(self, region_id: int):
        """Objective wrapper tagging the first call as the selected center."""
        calls = {"n": 0}

        def proxy(x):
            event = EVENT_RESTART_SELECT if calls["n"] == 0 else EVENT_RESTART_INIT
            calls["n"] += 1
            return self.evaluate(x, region_id, event)

        return proxy

    # -- region construction ----------------------------------------------

    def _random_region(self, region_id: int, event: str) -> TrustRegion:
        n = min(self.cfg.n_init, self.remaining)
        pts = sobol_points(n, self.objective.dim, self.next_seed())
        local = Dataset(self.objective.dim)
        for p in pts:
            local.append(p, self.evaluate(p, region_id, event))
        return TrustRegion(center=local.best_point(), length=self.cfg.length_init, data=local)

    def _selected_region(self, region_id: int) -> TrustRegion:
        result: SelectionResult = select_trust_region(
            self.data,
            self._selection_proxy(region_id),
            self.cfg.selection_settings(),
            self.next_seed(),
        )
        local = Dataset(self.objective.dim)
        local.extend(result.points, result.values)
        return TrustRegion(center=local.best_point(), length=self.cfg.length_init, data=local)

    def _region_from_center(self, center: np.ndarray, lengths: np.ndarray, region_id: int) -> TrustRegion:
        n = min(self.cfg.n_init, self.remaining)
        local = Dataset(self.objective.dim)
        local.append(center, self.evaluate(center, region_id, EVENT_RESTART_SELECT))
        if n > 1:
            pts = interior_points(center, lengths, n - 1, self.next_seed())
            for p in pts:
                local.append(p, self.evaluate(p, region_id, EVENT_RESTART_INIT))
        return TrustRegion(center=local.best_point(), length=self.cfg.length_init, data=local)

    def _fresh_region(self, region_id: int, first: bool) -> TrustRegion:
        mode = self.cfg.region_mode
        wants_selection = mode == "select" or (mode == "select-restart" and not first)
        if wants_selection and len(self.data) > 0 and self.remaining >= self.cfg.n_init:
            return self._selected_region(region_id)
        return self._random_region(region_id, EVENT_INIT if first else EVENT_RESTART_INIT)

    # -- modeling -----------------------------------------------------------

    def _fit_data(self, data: Dataset) -> Dataset:
        if self.cfg.subset_local and len(data) > self.cfg.n_gp_cap:
            return data.subset(select_representatives(data, self.cfg.n_gp_cap))
        return data

    def _ensure_model(self, tr: TrustRegion) -> GpModel:
        if tr.model is None:
            tr.model = fit_map(
                self._fit_data(tr.data),
                FitConfig(
                    n_restarts=self.cfg.fit_restarts,
                    max_iter=self.cfg.fit_max_iter,
                    seed=self.next_seed(),
                ),
            )
            tr.evals_since_refit = 0
        elif tr.evals_since_refit >= _refit_period(len(tr.data)):
            tr.model = fit_map(
                self._fit_data(tr.data),
                FitConfig(
                    n_restarts=self.cfg.refit_restarts,
                    max_iter=self.cfg.fit_max_iter,
                    seed=self.next_seed(),
                    warm_start=tr.model.hyperparams,
                ),
            )
            tr.evals_since_refit = 0
        return tr.model

    # -- local search -------------------------------------------------------

    def _propose(self, tr: TrustRegion, model: GpModel, batch: int) -> np.ndarray:
        lengths = per_dim_lengths(tr.length, model.hyperparams.lengthscales, self.cfg.length_max)
        bounds = region_bounds(RegionGeometry(tr.center, lengths))
        if self.cfg.acquisition == "ts":
            return ts_candidate_argmin_batch(
                model, bounds, tr.center, self.cfg.n_ts_candidates, self.next_seed(), batch
            )
        objective, gradient = _logei_objective(model, model.best_f())
        point, _ = maximize_smooth(objective, bounds, self.cfg.inner, self.next_seed(), gradient=gradient)
        return point[None, :]

    def _local_step(self, tr: TrustRegion, region_id: int) -> None:
        model = self._ensure_model(tr)
        batch = min(self.cfg.batch_size, self.remaining)
        points = self._propose(tr, model, batch)
        prev_best = tr.data.best_value()
        values = np.array([self.evaluate(p, region_id, EVENT_LOCAL) for p in points])
        for p, v in zip(points, values):
            tr.data.append(p, v)
            tr.model = tr.model.extend(p, v)
            tr.evals_since_refit += 1
        best = int(np.argmin(values))
        update_trust_region(tr, float(values[best]), prev_best, points[best], self.cfg)

    # -- loops ---------------------------------------------------------------

    def run_turbo_m(self, m: int) -> list[RunRecord]:
        cfg = self.cfg
        slots: list[Optional[TrustRegion]] = [None] * m
        first_slot = [True] * m

        if cfg.region_mode == "select":
            # global scan: feeds the selector's model, belongs to no region
            n = min(cfg.n_init, self.remaining)
            for i, p in enumerate(sobol_points(n, self.objective.dim, self.next_seed())):
                self.evaluate(p, i % m, EVENT_INIT)
            if self.remaining >= cfg.n_init and len(self.data) > 0:
                if m == 1:
                    slots[0] = self._selected_region(0)
                else:
                    centers, lengths, _ = propose_centers_joint(
                        self.data, cfg.selection_settings(), m, self.next_seed()
                    )
                    for i, c in enumerate(centers):
                        if self.remaining == 0:
                            break
                        slots[i] = self._region_from_center(c, lengths, i)
                first_slot = [False] * m

        turn = 0
        while self.remaining > 0:
            i = turn % m
            turn += 1
            tr = slots[i]
            if tr is None or tr.status == "collapsed":
                slots[i] = self._fresh_region(i, first_slot[i])
                first_slot[i] = False
                continue
            self._local_step(tr, i)
        return self.records

    def run_global_gp(self) -> list[RunRecord]:
        cfg = self.cfg
        for p in sobol_points(min(cfg.n_init, self.remaining), self.objective.dim, self.next_seed()):
            self.evaluate(p, 0, EVENT_INIT)
        region = TrustRegion(
            center=self.data.best_point(), length=cfg.length_init, data=self.data
        )
        bounds = (np.zeros(self.objective.dim), np.ones(self.objective.dim))
        while self.remaining > 0:
            model = self._ensure_model(region)
            objective, gradient = _logei_objective(model, model.best_f())
            point, _ = maximize_smooth(objective, bounds, cfg.inner, self.next_seed(), gradient=gradient)
            value = self.evaluate(point, 0, EVENT_LOCAL)
            region.model = region.model.extend(point, value)
            region.evals_since_refit += 1
        return self.records


def turbo1_run(objective: ObjectiveFn, cfg: TurboConfig, seed: int) -> list[RunRecord]:
    """Single-trust-region loop (m = 1)."""
    return _Runner(objective, cfg, seed).run_turbo_m(1)


def turbo_m_run(objective: ObjectiveFn, cfg: TurboConfig, m: int, seed: int) -> list[RunRecord]:
    """Round-robin loop over m independent trust regions."""
    if m < 1:
        raise ConfigurationError("m must be positive")
    if m > 1 and cfg.region_mode == "select" and cfg.selector != "qrei":
        raise ConfigurationError("joint initial placement of several regions requires selector qrei")
    return _Runner(objective, cfg, seed).run_turbo_m(m)


def global_gp_run(objective: ObjectiveFn, cfg: TurboConfig, seed: int) -> list[RunRecord]:
    """Plain global-GP optimization: one model over the whole cube."""
    return _Runner(objective, cfg, seed).run_global_gp()
