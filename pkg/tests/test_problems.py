import numpy as np
import pytest

from regionalbo.errors import ConfigurationError
from regionalbo.problems import (
    Dataset,
    benchmark_names,
    benchmark_suite,
    sobol_points,
    standardize,
    unstandardize,
)


def star_discrepancy_2d(points, grid=50):
    """Brute-force star discrepancy over anchor boxes [0, a) on a 2D grid."""
    n = points.shape[0]
    worst = 0.0
    for i in range(1, grid + 1):
        for j in range(1, grid + 1):
            a = np.array([i / grid, j / grid])
            count = np.sum(np.all(points < a, axis=1))
            worst = max(worst, abs(count / n - a[0] * a[1]))
    return worst


class TestSobol:
    def test_range_containment(self):
        pts = sobol_points(4, 2, seed=0)
        assert pts.shape == (4, 2)
        assert np.all(pts >= 0.0) and np.all(pts <= 1.0)

    def test_determinism(self):
        a = sobol_points(64, 5, seed=7)
        b = sobol_points(64, 5, seed=7)
        np.testing.assert_array_equal(a, b)
        c = sobol_points(64, 5, seed=8)
        assert not np.array_equal(a, c)

    def test_lower_discrepancy_than_uniform(self):
        low = sobol_points(256, 2, seed=1)
        uniform = np.random.default_rng(1).random((256, 2))
        assert star_discrepancy_2d(low) < star_discrepancy_2d(uniform)

    def test_dimension_limit(self):
        with pytest.raises(ConfigurationError):
            sobol_points(4, 30000, seed=0)
        with pytest.raises(ConfigurationError):
            sobol_points(0, 2, seed=0)


class TestStandardize:
    def test_two_point_symmetry(self):
        z, mean, std = standardize([2.0, 4.0])
        np.testing.assert_allclose(z, [-1.0, 1.0])
        assert mean == 3.0 and std == 1.0

    def test_degenerate_fallback(self):
        z, mean, std = standardize([5.0, 5.0, 5.0])
        np.testing.assert_array_equal(z, [0.0, 0.0, 0.0])
        assert mean == 5.0 and std == 1.0

    def test_output_moments(self):
        z, _, _ = standardize([1.0, 2.0, 3.0, 4.0])
        assert abs(np.mean(z)) <= 1e-12
        assert abs(np.std(z) - 1.0) <= 1e-12

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(0)
        values = rng.normal(3.0, 7.0, size=50)
        z, mean, std = standardize(values)
        np.testing.assert_allclose(unstandardize(z, mean, std), values, atol=1e-12)


class TestBenchmarks:
    def test_known_minima(self):
        # raw-space optima mapped through the unit-cube parameterization
        ackley = benchmark_suite("ackley", 4)
        assert abs(ackley(np.full(4, 0.5))) <= 1e-12

        rosen = benchmark_suite("rosenbrock", 3)
        unit_one = rosen.space.to_unit(np.ones(3))
        assert abs(rosen(unit_one)) <= 1e-12

        levy = benchmark_suite("levy", 3)
        assert abs(levy(levy.space.to_unit(np.ones(3)))) <= 1e-12

        rast = benchmark_suite("rastrigin", 2)
        assert abs(rast(np.full(2, 0.5))) <= 1e-12

        st = benchmark_suite("styblinski_tang", 2)
        x_star = st.space.to_unit(np.full(2, -2.903534018185960))
        assert st(x_star) <= st.known_optimum + 1e-6

    def test_sharp_broad_valleys(self):
        from regionalbo.problems import BROAD_VALLEY_CENTER, SHARP_VALLEY_CENTER

        f = benchmark_suite("sharp_broad_1d", 1)
        grid = np.linspace(0.0, 1.0, 100001)
        values = np.array([f(np.array([x])) for x in grid])
        x_min = grid[np.argmin(values)]
        assert abs(x_min - SHARP_VALLEY_CENTER) < 0.01  # global minimum in the narrow valley

        mid = 0.5 * (SHARP_VALLEY_CENTER + BROAD_VALLEY_CENTER)
        narrow_floor = values[np.abs(grid - SHARP_VALLEY_CENTER) < 0.05].min()
        broad_floor = values[np.abs(grid - BROAD_VALLEY_CENTER) < 0.3].min()
        span = values.max() - values.min()
        # count grid points within 10% of each valley's depth
        narrow_count = np.sum((values <= narrow_floor + 0.1 * span) & (grid < mid))
        broad_count = np.sum((values <= broad_floor + 0.1 * span) & (grid > mid))
        assert narrow_count > 0
        assert broad_count > 2.5 * narrow_count

    def test_purity(self):
        f = benchmark_suite("ackley", 3)
        rng = np.random.default_rng(5)
        pts = rng.random((1000, 3))
        first = np.array([f(p) for p in pts])
        second = np.array([f(p) for p in pts])
        np.testing.assert_array_equal(first, second)

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError):
            benchmark_suite("nope", 2)
        assert "ackley" in benchmark_names()


class TestDataset:
    def test_append_and_best(self):
        data = Dataset(2)
        data.append([0.2, 0.3], 5.0)
        data.append([0.7, 0.1], -1.0)
        assert data.best_index() == 1
        assert data.best_value() == -1.0
        np.testing.assert_array_equal(data.best_point(), [0.7, 0.1])

    def test_rejects_out_of_cube(self):
        data = Dataset(1)
        with pytest.raises(ValueError):
            data.append([1.5], 0.0)
