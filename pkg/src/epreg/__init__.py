"""Kurtosis-based checks for lasso penalties and adaptive l_q regression.

The package tests whether a Laplace prior (equivalently, a lasso penalty)
is consistent with the coefficients of a linear regression, and when it is
not, estimates the coefficients under an exponential power prior with a
moment-matched shape parameter.
"""

__version__ = "0.1.0"

from .data import RegressionData, load_csv, standardize
from .distributions import (
    EpPrior,
    SpikeSlab,
    ep_density,
    ep_kurtosis,
    ep_sample,
    shape_from_kurtosis,
    spike_slab_sample,
)
from .errors import (
    BoundaryVarianceError,
    DataError,
    DegenerateInputError,
    DomainError,
    EpregError,
    NotIdentifiableError,
    OptimizationError,
)
from .estimation import (
    ShapeEstimate,
    VarianceEstimates,
    estimate_shape,
    estimate_variances,
    variance_objective,
)
from .simulation import (
    AdaptiveConfig,
    AdaptiveResult,
    Scenario,
    SimReport,
    adaptive_estimate,
    run_estimation_study,
    run_power_study,
)
from .solvers import (
    ModeFit,
    PosteriorDraws,
    coordinate_descent_mode,
    effective_sample_size,
    gibbs_sampler,
    mode_threshold,
)
from .testing import (
    BiasConstants,
    DesignDecomposition,
    TestOutcome,
    bias_constants,
    choose_delta2,
    corrected_kurtosis,
    design_decomposition,
    empirical_kurtosis,
    laplace_test,
    null_quantiles,
    null_statistic_sample,
    ols_estimate,
    oracle_test,
    proposition_bound,
    ridge_estimate,
)

__all__ = [
    "__version__",
    "RegressionData", "load_csv", "standardize",
    "EpPrior", "SpikeSlab", "ep_density", "ep_kurtosis", "ep_sample",
    "shape_from_kurtosis", "spike_slab_sample",
    "BoundaryVarianceError", "DataError", "DegenerateInputError",
    "DomainError", "EpregError", "NotIdentifiableError", "OptimizationError",
    "ShapeEstimate", "VarianceEstimates", "estimate_shape",
    "estimate_variances", "variance_objective",
    "AdaptiveConfig", "AdaptiveResult", "Scenario", "SimReport",
    "adaptive_estimate", "run_estimation_study", "run_power_study",
    "ModeFit", "PosteriorDraws", "coordinate_descent_mode",
    "effective_sample_size", "gibbs_sampler", "mode_threshold",
    "BiasConstants", "DesignDecomposition", "TestOutcome", "bias_constants",
    "choose_delta2", "corrected_kurtosis", "design_decomposition",
    "empirical_kurtosis", "laplace_test", "null_quantiles",
    "null_statistic_sample", "ols_estimate", "oracle_test",
    "proposition_bound", "ridge_estimate",
]
