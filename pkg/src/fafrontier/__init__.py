"""Finite-sample fairness-accuracy frontier toolkit for two-group linear regression."""

from .allocation import AllocationPlan, known_cov_allocation, unknown_cov_allocation
from .bounds import (
    BoundConfig,
    BoundReport,
    bias_lower_bound,
    bias_upper_bound,
    combined_excess_bound,
    cross_term_bound,
    evaluate_all,
    gaussian_cprime_limit,
    known_cov_excess_bound,
    known_cov_group_bound,
    small_ball_constant,
    variance_lower_bound,
    variance_upper_bound,
)
from .datagen import (
    AssouadBiasInstance,
    AssouadVarianceInstance,
    GroupDataset,
    build_assouad_bias_instance,
    build_assouad_variance_instance,
    gauss_class_check,
    gaussian_small_ball_params,
    gaussian_subgaussian_param,
    sample_group,
)
from .estimators import (
    EmpiricalMoments,
    EstimatorKind,
    RankDeficientError,
    cross_term,
    empirical_moments,
    fit_estimator,
    group_ols,
    known_cov_estimator,
    pooled_ols,
)
from .model import (
    BLUE,
    RED,
    FrontierPoint,
    GroupSpec,
    ModelValidationError,
    PopulationModel,
    RiskPair,
    Weight,
    excess_risk_identity,
    fa_dominates,
    group_balance_check,
    optimal_beta_lambda,
    per_group_excess_identity,
    population_risk,
    trace_frontier,
    weighted_risk,
)
from .montecarlo import (
    McConfig,
    McReport,
    assouad_probe,
    assouad_sweep,
    decomposition_mc,
    exact_risk_rhs_mc,
    frontier_band_mc,
    rate_fit,
    realization_asymmetry_mc,
    run_excess_mc,
)
from .rng import RngSpec

__version__ = "0.1.0"
