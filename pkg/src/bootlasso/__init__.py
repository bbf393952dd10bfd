"""Lasso penalty tuning with a flexible-weighted bootstrap."""
from .errors import BootLassoError
from .lasso import (
    Dataset,
    LassoPath,
    compute_lambda_grid,
    fit_path,
    lambda_grid,
    lambda_max,
    standardize,
    weighted_lasso_fit,
)
from .weights import WeightScheme, compute_rho, sorted_weight_profile
from .tuner import (
    TuningConfig,
    TuningResult,
    run_ebic,
    run_exact_kfold_cv,
    run_weighted_bootstrap,
)
from .evaluation import confusion, mcc, mcc_curve

__version__ = "0.1.0"

__all__ = [
    "BootLassoError", "Dataset", "LassoPath", "TuningConfig", "TuningResult", "WeightScheme",
    "compute_lambda_grid", "compute_rho", "confusion", "fit_path", "lambda_grid", "lambda_max",
    "mcc", "mcc_curve", "run_ebic", "run_exact_kfold_cv", "run_weighted_bootstrap",
    "sorted_weight_profile", "standardize", "weighted_lasso_fit",
]
