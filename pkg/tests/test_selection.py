import logging

import numpy as np
import pytest

import regionalbo.selection as selection_mod
from regionalbo.errors import ModelFitError
from regionalbo.problems import Dataset, benchmark_suite
from regionalbo.regional import (
    RegionalAcqSpec,
    RegionGeometry,
    q_regional_ei,
    q_regional_ei_batch,
    region_bounds,
)
from regionalbo.selection import (
    SelectionSettings,
    propose_center,
    propose_centers_joint,
    select_trust_region,
)

from test_regional import TWO_VALLEY_SAMPLES, watershed


def two_valley_data():
    f = benchmark_suite("sharp_broad_1d", 1)
    data = Dataset(1)
    for x in TWO_VALLEY_SAMPLES:
        data.append(np.array([x]), f(np.array([x])))
    return data, f


class CountingObjective:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


class TestSelectTrustRegion:
    def test_empty_data_random_fallback(self):
        f = benchmark_suite("rastrigin", 2)
        objective = CountingObjective(f)
        data = Dataset(2)
        settings = SelectionSettings(n_init=9)
        result = select_trust_region(data, objective, settings, seed=0)
        assert result.used_fallback
        assert objective.calls == 9
        assert result.points.shape == (9, 2)
        assert np.all(result.points >= 0.0) and np.all(result.points <= 1.0)
        # center is the best of the random points
        best = np.argmin(result.values)
        np.testing.assert_array_equal(result.center, result.points[best])

    def test_consumes_exactly_n_evaluations(self):
        data, f = two_valley_data()
        objective = CountingObjective(f)
        settings = SelectionSettings(n_init=7, length_init=0.3, n_x=32, n_f=64)
        result = select_trust_region(data, objective, settings, seed=1)
        assert objective.calls == 7
        assert not result.used_fallback

    def test_points_inside_selected_region(self):
        data, f = two_valley_data()
        settings = SelectionSettings(n_init=8, length_init=0.3, n_x=32, n_f=64)
        result = select_trust_region(data, f, settings, seed=2)
        prop = propose_center(data, settings, seed=np.random.SeedSequence(2).generate_state(3)[1])
        lower, upper = region_bounds(RegionGeometry(result.center, prop.lengths))
        assert np.all(result.points >= lower - 1e-12)
        assert np.all(result.points <= upper + 1e-12)
        np.testing.assert_array_equal(result.points[0], result.center)

    def test_first_selection_in_broad_basin(self):
        # the spike-vs-bump landscape: the selected center must sit in the
        # broad-EI basin, matching a dense center scan of the same landscape
        data, f = two_valley_data()
        ws = watershed(f)
        settings = SelectionSettings(n_init=6, length_init=0.3)
        result = select_trust_region(data, f, settings, seed=3)
        assert result.center[0] > ws

    def test_center_dominates_scan_of_its_own_landscape(self):
        data, _ = two_valley_data()
        settings = SelectionSettings(n_init=6, length_init=0.3)
        prop = propose_center(data, settings, seed=11)
        centers = np.linspace(0.0, 1.0, 501)[:, None]
        scan = q_regional_ei_batch(prop.model, centers, prop.lengths, prop.model.best_f(), prop.mc)
        assert prop.acq_value >= scan.max() - 1e-9

    def test_fit_failure_falls_back_to_random(self, monkeypatch, caplog):
        data, f = two_valley_data()
        objective = CountingObjective(f)

        def broken_fit(*args, **kwargs):
            raise ModelFitError("forced failure")

        monkeypatch.setattr(selection_mod, "fit_map", broken_fit)
        with caplog.at_level(logging.WARNING):
            result = select_trust_region(data, objective, SelectionSettings(n_init=5), seed=4)
        assert result.used_fallback
        assert objective.calls == 5
        assert any("random" in rec.message for rec in caplog.records)

    def test_deterministic(self):
        data, f = two_valley_data()
        settings = SelectionSettings(n_init=6, length_init=0.3, n_x=32, n_f=64)
        a = select_trust_region(data, f, settings, seed=9)
        b = select_trust_region(data, f, settings, seed=9)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.values, b.values)

    def test_isotropic_lengths_switch(self):
        data, _ = two_valley_data()
        settings = SelectionSettings(n_init=5, shape_lengths=False)
        prop = propose_center(data, settings, seed=0)
        np.testing.assert_allclose(prop.lengths, settings.length_init)


class TestJointSelection:
    def test_three_centers_distinct_and_coordinatewise_optimal(self):
        data, _ = two_valley_data()
        settings = SelectionSettings(
            n_init=5, length_init=0.25, n_x=8, n_f=16, selector="qrei"
        )
        centers, lengths, _ = propose_centers_joint(data, settings, m=3, seed=5)
        assert len(centers) == 3
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(centers[i][0] - centers[j][0]) > 1e-3

        # grid check: each center is the argmax of the joint score given the
        # others fixed (candidate occupies the last slot by convention)
        prop = None  # the joint path refits internally; rebuild its landscape
        seeds = np.random.SeedSequence(5).generate_state(2 + 3 * 3)
        from regionalbo.selection import _fit_global_model

        model = _fit_global_model(data, settings, int(seeds[0] % (2**31 - 1)))
        best = model.best_f()
        mc = RegionalAcqSpec(n_x=8, n_f=16, q=3, base_sample_seed=int(seeds[1] % (2**31 - 1)))
        grid = np.linspace(0.0, 1.0, 41)[:, None]
        for i in range(3):
            others = [RegionGeometry(centers[j], lengths) for j in range(3) if j != i]
            from regionalbo.regional import q_regional_ei_joint_batch

            achieved = q_regional_ei_joint_batch(
                model, others, centers[i][None, :], lengths, best, mc
            )[0]
            alternatives = q_regional_ei_joint_batch(model, others, grid, lengths, best, mc)
            assert achieved >= alternatives.max() - 1e-6

    def test_joint_requires_qrei(self):
        data, _ = two_valley_data()
        from regionalbo.errors import ConfigurationError

        with pytest.raises(ConfigurationError):
            propose_centers_joint(data, SelectionSettings(selector="rucb"), m=2, seed=0)
