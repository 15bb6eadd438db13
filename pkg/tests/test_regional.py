import numpy as np
import pytest

from regionalbo.acquisition import expected_improvement, log_expected_improvement, ucb_min
from regionalbo.gp import FitConfig, GpHyperparams, fit_map
from regionalbo.problems import Dataset, benchmark_suite
from regionalbo.regional import (
    RegionalAcqSpec,
    RegionGeometry,
    log_regional_ei,
    q_regional_ei,
    q_regional_ei_batch,
    region_bounds,
    regional_ei,
    regional_ucb,
)

from conftest import make_model


def trapezoid_ei_average(model, lower, upper, best_f, n_grid=10_000):
    """Dense-grid oracle for the average EI over a 1-D interval."""
    grid = np.linspace(lower, upper, n_grid)[:, None]
    mean, var = model.posterior(grid)
    ei = expected_improvement(mean, var, best_f)
    return np.trapezoid(ei, grid[:, 0]) / (upper - lower)


TWO_VALLEY_SAMPLES = [0.02, 0.08, 0.14, 0.205, 0.295, 0.34, 0.41, 0.48, 0.58, 0.82, 0.93, 0.99]


def two_valley_model():
    """Frozen two-peak construction: sharp tall EI spike near the narrow
    valley, broad lower EI bump over the wide valley."""
    f = benchmark_suite("sharp_broad_1d", 1)
    data = Dataset(1)
    for x in TWO_VALLEY_SAMPLES:
        data.append(np.array([x]), f(np.array([x])))
    hp = GpHyperparams(np.array([0.06]), 1.0, 1e-6)
    return fit_map(data, FitConfig(fixed=hp)), f


def watershed(f, lo=0.25, hi=0.70, n=20_001):
    """Ridge separating the two principal basins (grid map oracle)."""
    grid = np.linspace(lo, hi, n)
    values = np.array([f(np.array([x])) for x in grid])
    return grid[np.argmax(values)]


class TestRegionBounds:
    def test_interior(self):
        geom = RegionGeometry(np.full(3, 0.5), np.full(3, 0.8))
        lower, upper = region_bounds(geom)
        np.testing.assert_allclose(lower, 0.1)
        np.testing.assert_allclose(upper, 0.9)

    def test_lower_clip(self):
        geom = RegionGeometry(np.array([0.0]), np.array([0.8]))
        lower, upper = region_bounds(geom)
        assert lower[0] == 0.0 and upper[0] == pytest.approx(0.4)

    def test_both_clips(self):
        geom = RegionGeometry(np.array([1.0]), np.array([2.0]))
        lower, upper = region_bounds(geom)
        assert lower[0] == 0.0 and upper[0] == 1.0


class TestRegionalEi:
    def test_degenerate_region_equals_pointwise(self, model_1d):
        best = model_1d.best_f()
        center = np.array([0.37])
        geom = RegionGeometry(center, np.array([1e-12]))
        mean, var = model_1d.posterior(center[None, :])
        want = expected_improvement(mean, var, best)[0]
        got = regional_ei(model_1d, geom, best, n_x=64, seed=0)
        assert abs(got - want) <= 1e-9

    def test_constant_field(self):
        # far from all data the posterior is flat, so EI is constant there
        model = make_model(dim=1, n=5, seed=0, lengthscale=0.01)
        # training points live anywhere in [0,1]; shrink the lengthscale so a
        # narrow region between samples still sees the prior
        data_free = RegionGeometry(np.array([0.5]), np.array([1e-4]))
        best = model.best_f()
        mean, var = model.posterior(np.array([[0.5]]))
        c = expected_improvement(mean, var, best)[0]
        got = regional_ei(model, data_free, best, n_x=256, seed=1)
        assert abs(got - c) <= 1e-6

    def test_matches_trapezoid_oracle(self):
        model = make_model(dim=1, n=6, seed=2, lengthscale=0.15)
        best = model.best_f()
        geom = RegionGeometry(np.array([0.5]), np.array([0.3]))
        lower, upper = region_bounds(geom)
        oracle = trapezoid_ei_average(model, lower[0], upper[0], best)
        got = regional_ei(model, geom, best, n_x=2048, seed=3)
        assert abs(got - oracle) <= 0.01 * max(oracle, 1e-12)

    def test_full_cube_equals_global_average(self, model_1d):
        best = model_1d.best_f()
        geom = RegionGeometry(np.array([0.5]), np.array([1.0]))
        oracle = trapezoid_ei_average(model_1d, 0.0, 1.0, best)
        got = regional_ei(model_1d, geom, best, n_x=4096, seed=5)
        assert abs(got - oracle) <= 0.01 * max(oracle, 1e-12)
        assert got >= 0.0

    def test_mc_convergence_rate(self):
        # quadrupling the budget twice should at least halve the RMS error
        model = make_model(dim=1, n=6, seed=4, lengthscale=0.2)
        best = model.best_f()
        geom = RegionGeometry(np.array([0.45]), np.array([0.4]))
        lower, upper = region_bounds(geom)
        oracle = trapezoid_ei_average(model, lower[0], upper[0], best, n_grid=200_000)

        def rms(n_x):
            errs = [regional_ei(model, geom, best, n_x, seed=s) - oracle for s in range(20)]
            return float(np.sqrt(np.mean(np.square(errs))))

        assert rms(2048) <= rms(128) / 2.0


class TestQRegionalEi:
    def test_degenerate_matches_analytic_ei(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            model = make_model(dim=1, n=6, seed=trial, lengthscale=float(rng.uniform(0.1, 0.4)))
            best = model.best_f() + float(rng.uniform(-0.2, 0.4))
            center = rng.uniform(0.1, 0.9, size=1)
            geom = RegionGeometry(center, np.array([1e-12]))
            spec = RegionalAcqSpec(n_x=1, n_f=100_000, base_sample_seed=trial)
            got = q_regional_ei(model, [geom], best, spec)
            mean, var = model.posterior(center[None, :])
            want = expected_improvement(mean, var, best)[0]
            sigma_imp = np.sqrt(max(var[0], 1e-12))  # improvement std is below draw std
            se = sigma_imp / np.sqrt(spec.n_f)
            assert abs(got - want) <= 4.0 * se + 1e-9

    def test_no_improvement_mass(self, model_1d):
        geom = RegionGeometry(np.array([0.5]), np.array([0.2]))
        spec = RegionalAcqSpec(n_x=32, n_f=256, base_sample_seed=1)
        mean, _ = model_1d.posterior(np.array([[0.5]]))
        hopeless_best = float(mean[0] - 20.0)  # 20 sigma below everything
        assert q_regional_ei(model_1d, [geom], hopeless_best, spec) < 1e-6

    def test_two_valley_scenario(self):
        model, f = two_valley_model()
        best = model.best_f()
        ws = watershed(f)

        grid = np.linspace(0.0, 1.0, 4001)[:, None]
        mean, var = model.posterior(grid)
        ei = expected_improvement(mean, var, best)
        ei_argmax = grid[np.argmax(ei), 0]
        assert ei_argmax < ws  # pointwise EI prefers the sharp spike

        centers = np.linspace(0.0, 1.0, 401)[:, None]
        spec = RegionalAcqSpec(n_x=128, n_f=256, base_sample_seed=5)
        scores = q_regional_ei_batch(model, centers, np.array([0.3]), best, spec)
        q_argmax = centers[np.argmax(scores), 0]
        assert q_argmax > ws  # the region average prefers the broad bump

    def test_deterministic(self, model_1d):
        geom = RegionGeometry(np.array([0.4]), np.array([0.25]))
        spec = RegionalAcqSpec(n_x=64, n_f=128, base_sample_seed=9)
        a = q_regional_ei(model_1d, [geom], 0.0, spec)
        b = q_regional_ei(model_1d, [geom], 0.0, spec)
        assert a == b and a >= 0.0

    def test_joint_scoring_rewards_coverage(self, model_1d):
        # a second region duplicating the first adds nothing; a distinct one can
        best = model_1d.best_f() + 0.5
        spec = RegionalAcqSpec(n_x=32, n_f=512, base_sample_seed=2)
        g1 = RegionGeometry(np.array([0.3]), np.array([0.2]))
        g_dup = RegionGeometry(np.array([0.3]), np.array([0.2]))
        single = q_regional_ei(model_1d, [g1], best, spec)
        doubled = q_regional_ei(model_1d, [g1, g_dup], best, spec)
        assert doubled <= single * 1.05  # duplicated coverage cannot help

    def test_batch_matches_single(self, model_1d):
        spec = RegionalAcqSpec(n_x=32, n_f=64, base_sample_seed=7)
        best = model_1d.best_f() + 0.2
        centers = np.array([[0.2], [0.5], [0.8]])
        batch = q_regional_ei_batch(model_1d, centers, np.array([0.3]), best, spec)
        for c, want in zip(centers, batch):
            got = q_regional_ei(model_1d, [RegionGeometry(c, np.array([0.3]))], best, spec)
            assert got == pytest.approx(want, abs=1e-12)


class TestLogRegionalEi:
    def test_constant_field(self):
        model = make_model(dim=1, n=5, seed=0, lengthscale=0.01)
        geom = RegionGeometry(np.array([0.5]), np.array([1e-4]))
        best = model.best_f()
        mean, var = model.posterior(np.array([[0.5]]))
        c = expected_improvement(mean, var, best)[0]
        got = log_regional_ei(model, geom, best, n_x=128, seed=1)
        assert abs(got - np.log(c)) <= 1e-8

    def test_matches_log_of_rei(self, model_1d):
        best = model_1d.best_f() + 0.3
        geom = RegionGeometry(np.array([0.6]), np.array([0.3]))
        plain = regional_ei(model_1d, geom, best, n_x=512, seed=11)
        logged = log_regional_ei(model_1d, geom, best, n_x=512, seed=11)
        assert plain > 1e-200
        np.testing.assert_allclose(np.exp(logged), plain, rtol=1e-8)

    def test_degenerate_region(self, model_1d):
        center = np.array([0.25])
        geom = RegionGeometry(center, np.array([1e-12]))
        best = model_1d.best_f() + 0.1
        mean, var = model_1d.posterior(center[None, :])
        want = log_expected_improvement(mean, var, best)[0]
        got = log_regional_ei(model_1d, geom, best, n_x=16, seed=0)
        assert abs(got - want) <= 1e-8


class TestRegionalUcb:
    def test_flat_mean_beta_zero(self):
        model = make_model(dim=1, n=5, seed=0, lengthscale=0.01)
        geom = RegionGeometry(np.array([0.5]), np.array([1e-4]))
        mean, _ = model.posterior(np.array([[0.5]]))
        got = regional_ucb(model, geom, 0.0, n_x=64, seed=0)
        assert abs(got - (-mean[0])) <= 1e-6

    def test_degenerate_region(self, model_1d):
        center = np.array([0.7])
        geom = RegionGeometry(center, np.array([1e-12]))
        mean, var = model_1d.posterior(center[None, :])
        want = ucb_min(mean, var, 4.0)[0]
        got = regional_ucb(model_1d, geom, 4.0, n_x=32, seed=2)
        assert abs(got - want) <= 1e-9

    def test_matches_trapezoid_oracle(self, model_1d):
        geom = RegionGeometry(np.array([0.5]), np.array([0.3]))
        lower, upper = region_bounds(geom)
        grid = np.linspace(lower[0], upper[0], 10_000)[:, None]
        mean, var = model_1d.posterior(grid)
        oracle = np.trapezoid(ucb_min(mean, var, 4.0), grid[:, 0]) / (upper[0] - lower[0])
        got = regional_ucb(model_1d, geom, 4.0, n_x=2048, seed=3)
        assert abs(got - oracle) <= 0.01 * max(abs(oracle), 1e-12)
