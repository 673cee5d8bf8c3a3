"""Regularized robust M-estimators of multivariate scatter."""

from .core import (
    ConvergenceWarning,
    DegenerateScaleError,
    NotPositiveDefiniteError,
    RankDeficientError,
    SpectralDecomposition,
    WeightFunction,
    check_general_position,
    condition_number,
    custom_weight,
    lower_median,
    riemannian_distance,
    shape_of,
    shifted_weight,
    spectral_decompose,
    tyler_weight,
)
from .hbd import D_value, HbdResult, affine_location_scatter, d_value, sigma_R, sigma_sc_R
from .location import CenterSpec, center_data, compute_center, marginal_median, robust_sigma2, spatial_median
from .penalized import (
    ConditionAError,
    PenaltySpec,
    ScatterEstimate,
    adjusted_v,
    check_condition_a,
    scaled_scatter,
    solve_penalized,
    tyler_shape,
)
from .population import EllipticalModel, population_table, solve_lambda_system
from .sscm import generalized_sscm, sscm
from .tuning import CvCurve, TuningResult, cv_curves, cv_value, cvr_value, kfold_split, select_beta, tilde_beta

__version__ = "0.1.0"
