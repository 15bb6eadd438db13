"""Gaussian-process regression with a Matern-5/2 ARD kernel.

Hyperparameters (per-dimension lengthscales, signal variance, noise variance)
are chosen by maximizing the log marginal likelihood plus smooth log-normal
priors, via multi-start bounded quasi-Newton ascent in log-parameter space.
Targets are standardized before fitting; the model keeps the moments so
callers can map predictions back to raw units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import ModelFitError
from .problems import Dataset, sobol_points, standardize

_SQRT5 = math.sqrt(5.0)
# relative jitter schedule for Cholesky factorizations of K + noise*I
_JITTERS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class GpHyperparams:
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0.0):
            raise ValueError("lengthscales must be positive")
        if self.signal_variance <= 0.0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0.0:
            raise ValueError("noise_variance must be non-negative")
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def dim(self) -> int:
        return self.lengthscales.size


def _scaled_sqdist(X: np.ndarray, X2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    A = X / lengthscales
    B = X2 / lengthscales
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.maximum(sq, 0.0)


def _matern52(r: np.ndarray) -> np.ndarray:
    sr = _SQRT5 * r
    return (1.0 + sr + sr**2 / 3.0) * np.exp(-sr)


def kernel_matrix(X: np.ndarray, X2: np.ndarray, hp: GpHyperparams) -> np.ndarray:
    r = np.sqrt(_scaled_sqdist(np.atleast_2d(X), np.atleast_2d(X2), hp.lengthscales))
    return hp.signal_variance * _matern52(r)


def kernel(x: np.ndarray, x_prime: np.ndarray, hp: GpHyperparams) -> float:
    """Matern-5/2 ARD covariance between two points."""
    return float(kernel_matrix(np.atleast_2d(x), np.atleast_2d(x_prime), hp)[0, 0])


def kernel_grad_first(x: np.ndarray, X2: np.ndarray, hp: GpHyperparams) -> np.ndarray:
    """d k(x, X2[j]) / d x, shape (len(X2), D)."""
    x = np.asarray(x, dtype=float)
    X2 = np.atleast_2d(X2)
    ls = hp.lengthscales
    diff = (x[None, :] - X2) / ls**2
    r = np.sqrt(np.maximum(np.sum(((x[None, :] - X2) / ls) ** 2, axis=1), 0.0))
    w = -(5.0 / 3.0) * hp.signal_variance * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
    return w[:, None] * diff


def _chol_with_jitter(K_noisy: np.ndarray, signal_variance: float) -> tuple[np.ndarray, float]:
    last = None
    for rel in _JITTERS:
        jitter = rel * signal_variance
        try:
            L = cholesky(K_noisy + jitter * np.eye(K_noisy.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            last = jitter
    raise ModelFitError(f"Cholesky failed after escalating jitter to {last:.3e}")


def log_marginal_likelihood(X: np.ndarray, y: np.ndarray, hp: GpHyperparams) -> float:
    return _lml_impl(np.atleast_2d(X), np.asarray(y, dtype=float), hp, want_grad=False)[0]


def log_marginal_likelihood_grad(
    X: np.ndarray, y: np.ndarray, hp: GpHyperparams
) -> tuple[float, np.ndarray]:
    """LML and its gradient w.r.t. [log lengthscales..., log signal, log noise]."""
    return _lml_impl(np.atleast_2d(X), np.asarray(y, dtype=float), hp, want_grad=True)


def _lml_impl(X, y, hp: GpHyperparams, want_grad: bool):
    n, d = X.shape
    sq = _scaled_sqdist(X, X, hp.lengthscales)
    r = np.sqrt(sq)
    m52 = _matern52(r)
    K_nl = hp.signal_variance * m52
    K = K_nl + hp.noise_variance * np.eye(n)
    L, jitter = _chol_with_jitter(K, hp.signal_variance)
    alpha = cho_solve((L, True), y)
    lml = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * math.log(2.0 * math.pi)
    if not want_grad:
        return lml, None

    Kinv = cho_solve((L, True), np.eye(n))
    A = np.outer(alpha, alpha) - Kinv
    grad = np.empty(d + 2)
    # dK/d log l_d = (5/3) * sigma_f^2 * (1 + sqrt5 r) exp(-sqrt5 r) * ((x_d - x'_d)/l_d)^2
    W = (5.0 / 3.0) * hp.signal_variance * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
    AW = A * W
    for j in range(d):
        diff = (X[:, j][:, None] - X[:, j][None, :]) / hp.lengthscales[j]
        grad[j] = 0.5 * float(np.sum(AW * diff**2))
    tr_A = float(np.trace(A))
    # the jitter scales with the signal variance, so it contributes here too
    grad[d] = 0.5 * (float(np.sum(A * K_nl)) + jitter * tr_A)
    grad[d + 1] = 0.5 * hp.noise_variance * tr_A
    return lml, grad


@dataclass
class FitConfig:
    """Settings for MAP hyperparameter fitting.

    The priors are log-normal (normal in log space, given as (mean, sd) of the
    log); constants below are package defaults documented here, not claims
    about any particular problem.
    """

    n_restarts: int = 8
    max_iter: int = 100
    seed: int = 0
    lengthscale_bounds: tuple[float, float] = (5e-3, 10.0)
    signal_bounds: tuple[float, float] = (1e-3, 1e3)
    noise_bounds: tuple[float, float] = (NOISE_FLOOR, 1.0)
    lengthscale_prior: tuple[float, float] = (math.log(0.4), 1.0)
    signal_prior: tuple[float, float] = (0.0, 1.0)
    noise_prior: tuple[float, float] = (math.log(1e-4), 2.0)
    warm_start: Optional[GpHyperparams] = None
    fixed: Optional[GpHyperparams] = None


def _log_prior_and_grad(theta: np.ndarray, cfg: FitConfig, d: int) -> tuple[float, np.ndarray]:
    locs = np.concatenate(
        [
            np.full(d, cfg.lengthscale_prior[0]),
            [cfg.signal_prior[0], cfg.noise_prior[0]],
        ]
    )
    scales = np.concatenate(
        [
            np.full(d, cfg.lengthscale_prior[1]),
            [cfg.signal_prior[1], cfg.noise_prior[1]],
        ]
    )
    z = (theta - locs) / scales
    return -0.5 * float(np.sum(z**2)), -z / scales


def _theta_to_hp(theta: np.ndarray, d: int) -> GpHyperparams:
    return GpHyperparams(
        lengthscales=np.exp(theta[:d]),
        signal_variance=float(np.exp(theta[d])),
        noise_variance=float(np.exp(theta[d + 1])),
    )


def map_objective(X: np.ndarray, y: np.ndarray, theta: np.ndarray, cfg: FitConfig) -> tuple[float, np.ndarray]:
    """Log posterior (LML + log prior) and gradient in log-parameter space."""
    d = X.shape[1]
    hp = _theta_to_hp(theta, d)
    lml, grad = log_marginal_likelihood_grad(X, y, hp)
    lp, lp_grad = _log_prior_and_grad(theta, cfg, d)
    return lml + lp, grad + lp_grad


@dataclass
class GpModel:
    """Fitted GP posterior over standardized targets."""

    hyperparams: GpHyperparams
    train_points: np.ndarray
    train_values: np.ndarray      # standardized
    train_values_raw: np.ndarray
    value_mean: float
    value_std: float
    chol: np.ndarray              # lower factor of K + noise*I + jitter*I
    alpha: np.ndarray
    jitter: float

    @property
    def n_train(self) -> int:
        return self.train_points.shape[0]

    def posterior(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Standardized-space posterior mean and variance, variance clamped >= 0."""
        points = np.atleast_2d(points)
        Kx = kernel_matrix(points, self.train_points, self.hyperparams)
        mean = Kx @ self.alpha
        V = solve_triangular(self.chol, Kx.T, lower=True)
        var = self.hyperparams.signal_variance - np.sum(V**2, axis=0)
        return mean, np.maximum(var, 0.0)

    def posterior_cov(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(points)
        Kx = kernel_matrix(points, self.train_points, self.hyperparams)
        mean = Kx @ self.alpha
        V = solve_triangular(self.chol, Kx.T, lower=True)
        cov = kernel_matrix(points, points, self.hyperparams) - V.T @ V
        return mean, 0.5 * (cov + cov.T)

    def posterior_cov_blocks(self, blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior over B independent point blocks of equal size.

        ``blocks`` has shape (B, m, D); returns means (B, m) and per-block
        covariances (B, m, m).  One flat triangular solve serves all blocks.
        """
        B, m, d = blocks.shape
        flat = blocks.reshape(B * m, d)
        Kx = kernel_matrix(flat, self.train_points, self.hyperparams)
        mean = (Kx @ self.alpha).reshape(B, m)
        V = solve_triangular(self.chol, Kx.T, lower=True).reshape(-1, B, m)
        A = blocks / self.hyperparams.lengthscales
        sq_norm = np.sum(A**2, axis=2)
        sq = sq_norm[:, :, None] + sq_norm[:, None, :] - 2.0 * np.einsum("bid,bjd->bij", A, A)
        prior = self.hyperparams.signal_variance * _matern52(np.sqrt(np.maximum(sq, 0.0)))
        cov = prior - np.einsum("nbi,nbj->bij", V, V)
        return mean, 0.5 * (cov + np.transpose(cov, (0, 2, 1)))

    def posterior_with_grad(self, x: np.ndarray) -> tuple[float, float, np.ndarray, np.ndarray]:
        """Mean, variance and their gradients w.r.t. x at a single point."""
        x = np.asarray(x, dtype=float)
        kx = kernel_matrix(x[None, :], self.train_points, self.hyperparams)[0]
        dk = kernel_grad_first(x, self.train_points, self.hyperparams)
        mean = float(kx @ self.alpha)
        dmean = dk.T @ self.alpha
        w = cho_solve((self.chol, True), kx)
        var = self.hyperparams.signal_variance - float(kx @ w)
        dvar = -2.0 * dk.T @ w
        if var < 0.0:
            var, dvar = 0.0, np.zeros_like(dvar)
        return mean, var, dmean, dvar

    def extend(self, point: np.ndarray, raw_value: float) -> "GpModel":
        """Condition on one more observation without refitting hyperparameters.

        The Cholesky factor grows by one row; targets are restandardized with
        the enlarged dataset's moments.
        """
        point = np.asarray(point, dtype=float)
        X = np.vstack([self.train_points, point[None, :]])
        raw = np.append(self.train_values_raw, float(raw_value))
        y, mean, std = standardize(raw)
        k_new = kernel_matrix(point[None, :], self.train_points, self.hyperparams)[0]
        k_self = self.hyperparams.signal_variance + self.hyperparams.noise_variance + self.jitter
        c = solve_triangular(self.chol, k_new, lower=True)
        d2 = k_self - float(c @ c)
        if d2 <= 1e-12 * self.hyperparams.signal_variance:
            # appended point nearly duplicates an existing one; rebuild from scratch
            return _build_model(X, raw, self.hyperparams)
        n = self.chol.shape[0]
        L = np.zeros((n + 1, n + 1))
        L[:n, :n] = self.chol
        L[n, :n] = c
        L[n, n] = math.sqrt(d2)
        alpha = cho_solve((L, True), y)
        return GpModel(
            hyperparams=self.hyperparams,
            train_points=X,
            train_values=y,
            train_values_raw=raw,
            value_mean=mean,
            value_std=std,
            chol=L,
            alpha=alpha,
            jitter=self.jitter,
        )

    def standardize_value(self, raw: float) -> float:
        return (raw - self.value_mean) / self.value_std

    def unstandardize_value(self, z: float) -> float:
        return z * self.value_std + self.value_mean

    def best_f(self) -> float:
        """Incumbent: smallest standardized training value."""
        return float(np.min(self.train_values))


def _build_model(X: np.ndarray, raw_values: np.ndarray, hp: GpHyperparams) -> GpModel:
    y, mean, std = standardize(raw_values)
    K = kernel_matrix(X, X, hp) + hp.noise_variance * np.eye(X.shape[0])
    L, jitter = _chol_with_jitter(K, hp.signal_variance)
    alpha = cho_solve((L, True), y)
    return GpModel(
        hyperparams=hp,
        train_points=X,
        train_values=y,
        train_values_raw=np.asarray(raw_values, dtype=float).copy(),
        value_mean=mean,
        value_std=std,
        chol=L,
        alpha=alpha,
        jitter=jitter,
    )


def fit_map(data: Dataset, config: Optional[FitConfig] = None) -> GpModel:
    """Fit hyperparameters by MAP and return the conditioned model.

    With ``config.fixed`` set, no optimization happens and the given
    hyperparameters are used directly (allowed even for a single point).
    """
    cfg = config or FitConfig()
    X = data.points
    raw = data.values
    if cfg.fixed is not None:
        return _build_model(X, raw, cfg.fixed)
    if len(data) < 2:
        raise ModelFitError("need at least 2 points to fit hyperparameters (or pass fixed ones)")

    d = X.shape[1]
    y, _, _ = standardize(raw)
    lo = np.log(
        np.concatenate([np.full(d, cfg.lengthscale_bounds[0]), [cfg.signal_bounds[0], cfg.noise_bounds[0]]])
    )
    hi = np.log(
        np.concatenate([np.full(d, cfg.lengthscale_bounds[1]), [cfg.signal_bounds[1], cfg.noise_bounds[1]]])
    )
    bounds = list(zip(lo, hi))

    starts = []
    center = np.clip(
        np.concatenate([np.full(d, cfg.lengthscale_prior[0]), [cfg.signal_prior[0], cfg.noise_prior[0]]]),
        lo,
        hi,
    )
    starts.append(center)
    if cfg.warm_start is not None:
        ws = np.log(
            np.concatenate(
                [
                    cfg.warm_start.lengthscales,
                    [cfg.warm_start.signal_variance, cfg.warm_start.noise_variance],
                ]
            )
        )
        starts.append(np.clip(ws, lo, hi))
    if cfg.n_restarts > 0:
        u = sobol_points(cfg.n_restarts, d + 2, seed=cfg.seed)
        starts.extend(lo + u * (hi - lo))

    def negative(theta):
        value, grad = map_objective(X, y, theta, cfg)
        return -value, -grad

    best_theta, best_val = None, -np.inf
    for x0 in starts:
        try:
            res = minimize(
                negative,
                x0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": cfg.max_iter},
            )
        except ModelFitError:
            continue
        if np.isfinite(res.fun) and -res.fun > best_val:
            best_val = -float(res.fun)
            best_theta = res.x
    if best_theta is None:
        raise ModelFitError("all hyperparameter optimization starts failed")
    return _build_model(X, raw, _theta_to_hp(best_theta, d))


def sample_posterior(model: GpModel, points: np.ndarray, n_draws: int, seed: int) -> np.ndarray:
    """Joint posterior draws over a finite point set, shape (n_draws, len(points)).

    Points whose posterior variance is (numerically) zero get their draws
    pinned to the posterior mean, so noiseless training points reproduce
    their training values exactly.
    """
    points = np.atleast_2d(points)
    mean, cov = model.posterior_cov(points)
    scale = model.hyperparams.signal_variance
    # variances below the model's own jitter floor are numerical zero
    live = np.diag(cov) > max(10.0 * model.jitter, 1e-12 * scale)
    m_live = int(np.sum(live))
    draws = np.tile(mean, (n_draws, 1))
    if m_live == 0:
        return draws
    sub = cov[np.ix_(live, live)]
    L = None
    last = None
    for rel in (0.0, 1e-12, 1e-10, 1e-8, 1e-6):
        try:
            L = cholesky(sub + rel * scale * np.eye(m_live), lower=True)
            break
        except np.linalg.LinAlgError:
            last = rel
    if L is None:
        raise ModelFitError(f"posterior covariance factorization failed at jitter {last:.1e}")
    Z = np.random.default_rng(seed).standard_normal((n_draws, m_live))
    draws[:, live] += Z @ L.T
    return draws
