"""Structured-penalty VAR/VARX estimation, tuning and forecasting."""

from ._kernels import BACKEND
from .analysis import export_diagnostics, forecast, generate_irf
from .benchmarks import naive_benchmarks, select_order_ic, varx_fit_qr, varx_forecast_eval
from .core import (
    CoefficientSet,
    LagRegression,
    ModelSpec,
    PenaltyStructure,
    SeriesMatrix,
    build_lag_regression,
    minnesota_shift,
    standardize,
    unstandardize,
)
from .penalties import build_partition, penalty_value, prox
from .refit import ifgls, oracle_gls, relaxed_ls, restriction_from_fit, weighted_relaxed_ls
from .simulate import is_stationary, scenario_generators, simulate_var, to_companion
from .solvers import SolverOptions, fit_path, fit_penalized
from .tuning import bisect_lambda_max, estimate_fixed, rolling_cv, theoretical_lambda_max

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CoefficientSet", "LagRegression", "ModelSpec", "PenaltyStructure",
    "SeriesMatrix", "SolverOptions", "bisect_lambda_max", "build_lag_regression",
    "build_partition", "estimate_fixed", "export_diagnostics", "fit_path", "fit_penalized",
    "forecast", "generate_irf", "ifgls", "is_stationary", "minnesota_shift", "naive_benchmarks",
    "oracle_gls", "penalty_value", "prox", "relaxed_ls", "restriction_from_fit", "rolling_cv",
    "scenario_generators", "select_order_ic", "simulate_var", "standardize",
    "theoretical_lambda_max", "to_companion", "unstandardize", "varx_fit_qr",
    "varx_forecast_eval", "weighted_relaxed_ls",
]
