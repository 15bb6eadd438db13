"""Trust-region Bayesian optimization with region-averaged acquisitions."""

from .acquisition import (
    batch_improvement,
    expected_improvement,
    log_expected_improvement,
    log_expected_improvement_grad,
    ucb_min,
)
from .bench import ExperimentConfig, run_experiment
from .gp import FitConfig, GpHyperparams, GpModel, fit_map, kernel, sample_posterior
from .optim import MultiStartConfig, maximize_smooth, ts_candidate_argmin
from .problems import Dataset, DesignSpace, ObjectiveFn, benchmark_suite, sobol_points, standardize
from .regional import (
    RegionalAcqSpec,
    RegionGeometry,
    log_regional_ei,
    q_regional_ei,
    region_bounds,
    regional_ei,
    regional_ucb,
)
from .selection import SelectionResult, SelectionSettings, select_trust_region
from .stats import wilcoxon_rank_sum, wilcoxon_signed_rank
from .subset import log_regret, select_representatives
from .theory import discrete_norm_reduction_check, indicator_fourier_factor, region_average_mc
from .turbo import (
    RunRecord,
    TrustRegion,
    TurboConfig,
    global_gp_run,
    per_dim_lengths,
    turbo1_run,
    turbo_m_run,
    update_trust_region,
)

__all__ = [
    "Dataset",
    "DesignSpace",
    "ExperimentConfig",
    "FitConfig",
    "GpHyperparams",
    "GpModel",
    "MultiStartConfig",
    "ObjectiveFn",
    "RegionGeometry",
    "RegionalAcqSpec",
    "RunRecord",
    "SelectionResult",
    "SelectionSettings",
    "TrustRegion",
    "TurboConfig",
    "batch_improvement",
    "benchmark_suite",
    "discrete_norm_reduction_check",
    "expected_improvement",
    "fit_map",
    "global_gp_run",
    "indicator_fourier_factor",
    "kernel",
    "log_expected_improvement",
    "log_expected_improvement_grad",
    "log_regional_ei",
    "log_regret",
    "maximize_smooth",
    "per_dim_lengths",
    "q_regional_ei",
    "region_average_mc",
    "region_bounds",
    "regional_ei",
    "regional_ucb",
    "run_experiment",
    "sample_posterior",
    "select_representatives",
    "select_trust_region",
    "sobol_points",
    "standardize",
    "ts_candidate_argmin",
    "turbo1_run",
    "turbo_m_run",
    "ucb_min",
    "update_trust_region",
    "wilcoxon_rank_sum",
    "wilcoxon_signed_rank",
]
