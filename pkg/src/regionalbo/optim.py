"""Inner optimizers: acquisition maximization over boxes.

Smooth acquisitions are maximized by scoring a batch of low-discrepancy raw
candidates and polishing the best few with bounded quasi-Newton ascent.
Thompson-sampling proposals instead take the argmin of one joint posterior
draw over a discrete candidate set built by perturbing the region center.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .gp import GpModel, sample_posterior
from .problems import sobol_points

# batched objective: maps (m, D) points to (m,) values
BatchObjective = Callable[[np.ndarray], np.ndarray]
BatchGradient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MultiStartConfig:
    n_raw: int = 512
    n_restarts: int = 10
    max_iters: int = 100
    gtol: float = 1e-6
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.n_restarts > self.n_raw:
            raise ValueError("n_restarts cannot exceed n_raw")


def _lex_best(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    """Highest value; exact ties broken by the lexicographically lowest point."""
    top = np.max(values)
    tied = np.flatnonzero(values == top)
    if tied.size == 1:
        return points[tied[0]].copy(), float(top)
    order = np.lexsort(points[tied].T[::-1])
    return points[tied[order[0]]].copy(), float(top)


def _fd_gradient(objective: BatchObjective, x: np.ndarray, lower, upper, step: float) -> np.ndarray:
    """Central differences in one batched objective call, clipped into bounds."""
    d = x.size
    plus = np.minimum(x[None, :] + step * np.eye(d), upper)
    minus = np.maximum(x[None, :] - step * np.eye(d), lower)
    vals = objective(np.vstack([plus, minus]))
    delta = plus[np.arange(d), np.arange(d)] - minus[np.arange(d), np.arange(d)]
    return (vals[:d] - vals[d:]) / np.where(delta > 0.0, delta, 1.0)


def maximize_smooth(
    objective: BatchObjective,
    bounds: tuple[np.ndarray, np.ndarray],
    cfg: MultiStartConfig,
    seed: int,
    gradient: Optional[BatchGradient] = None,
) -> tuple[np.ndarray, float]:
    """Multi-start bounded maximization of a batched scalar field.

    Scores ``cfg.n_raw`` scrambled low-discrepancy candidates, runs L-BFGS-B
    from the best ``cfg.n_restarts`` of them (analytic gradient when given,
    otherwise batched central differences), and returns the best point found.
    The result never scores below the best raw candidate.
    """
    lower = np.asarray(bounds[0], dtype=float)
    upper = np.asarray(bounds[1], dtype=float)
    d = lower.size
    raw = lower + sobol_points(cfg.n_raw, d, seed) * (upper - lower)
    raw_vals = np.asarray(objective(raw), dtype=float)
    order = np.argsort(-raw_vals, kind="stable")

    cand_pts = [raw[order[: max(1, cfg.n_restarts)]]]
    cand_vals = [raw_vals[order[: max(1, cfg.n_restarts)]]]

    box = list(zip(lower, upper))
    for idx in order[: cfg.n_restarts]:
        x0 = raw[idx]

        if gradient is not None:
            def neg(x):
                return -float(objective(x[None, :])[0]), -np.asarray(gradient(x[None, :])[0], dtype=float)
        else:
            def neg(x):
                val = -float(objective(x[None, :])[0])
                g = -_fd_gradient(objective, x, lower, upper, cfg.fd_step)
                return val, g

        try:
            res = minimize(
                neg,
                x0,
                jac=True,
                method="L-BFGS-B",
                bounds=box,
                options={"maxiter": cfg.max_iters, "gtol": cfg.gtol},
            )
        except (np.linalg.LinAlgError, ValueError):
            continue
        x_loc = np.clip(res.x, lower, upper)
        cand_pts.append(x_loc[None, :])
        # re-score through the objective itself so ties are judged consistently
        cand_vals.append(np.asarray(objective(x_loc[None, :]), dtype=float))

    points = np.vstack(cand_pts)
    values = np.concatenate(cand_vals)
    return _lex_best(points, values)


def default_ts_candidates(dim: int) -> int:
    """Candidate count: 2000 up to 50 dims, growing linearly to 5000 at 200."""
    span = np.clip(dim, 50, 200) - 50
    return int(round(2000 + span * 20))


def ts_candidate_argmin_batch(
    model: GpModel,
    tr_bounds: tuple[np.ndarray, np.ndarray],
    center: np.ndarray,
    n_candidates: Optional[int],
    seed: int,
    n_draws: int = 1,
) -> np.ndarray:
    """Thompson-sampling proposals inside a trust region, shape (n_draws, D).

    Candidates perturb each center coordinate independently with probability
    min(20/D, 1) (at least one coordinate always moves); perturbed values are
    low-discrepancy within the region.  Each joint posterior draw over the
    candidate set contributes its argmin.
    """
    center = np.asarray(center, dtype=float)
    lower = np.asarray(tr_bounds[0], dtype=float)
    upper = np.asarray(tr_bounds[1], dtype=float)
    d = center.size
    n = n_candidates if n_candidates is not None else default_ts_candidates(d)
    seeds = np.random.SeedSequence(seed).generate_state(3)
    pert = lower + sobol_points(n, d, int(seeds[0] % (2**31 - 1))) * (upper - lower)
    rng = np.random.default_rng(seeds[1])
    prob = min(20.0 / d, 1.0)
    mask = rng.random((n, d)) <= prob
    dead = np.flatnonzero(~mask.any(axis=1))
    if dead.size:
        mask[dead, rng.integers(0, d, size=dead.size)] = True
    cands = np.tile(center, (n, 1))
    cands[mask] = pert[mask]
    draws = sample_posterior(model, cands, n_draws, int(seeds[2] % (2**31 - 1)))
    return cands[np.argmin(draws, axis=1)].copy()


def ts_candidate_argmin(
    model: GpModel,
    tr_bounds: tuple[np.ndarray, np.ndarray],
    center: np.ndarray,
    n_candidates: Optional[int],
    seed: int,
) -> np.ndarray:
    """Single Thompson-sampling proposal (see the batch variant)."""
    return ts_candidate_argmin_batch(model, tr_bounds, center, n_candidates, seed, n_draws=1)[0]
