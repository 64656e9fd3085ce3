"""Forecasts, impulse responses and diagnostic exports."""

from __future__ import annotations

import warnings

import numpy as np

from .core import CoefficientSet, SeriesMatrix, predictor_vector
from .exceptions import InsufficientHistory, MissingExogenousFutures, NonVarModel
from .simulate import innovation_factor, is_stationary, to_companion


def _history_values(history, coef: CoefficientSet) -> np.ndarray:
    values = history.values if isinstance(history, SeriesMatrix) else np.atleast_2d(
        np.asarray(history, dtype=float))
    if values.shape[1] != coef.k + coef.m:
        if coef.m == 0 and values.shape[1] > coef.k:
            values = values[:, : coef.k]
        else:
            raise InsufficientHistory(
                f"history has {values.shape[1]} columns, model needs {coef.k + coef.m}")
    need = coef.lags_needed
    if values.shape[0] < need:
        raise InsufficientHistory(f"need {need} rows of history, got {values.shape[0]}")
    return values[values.shape[0] - need :] if need else values[:0]


def forecast(coef: CoefficientSet, history, n_ahead: int = 1, newx=None) -> np.ndarray:
    """``n_ahead x k`` recursive forecasts from the end of ``history``.

    Exogenous predictors enter with lags of at least one, so step ``j`` needs
    the future exogenous row ``j-1``; ``newx`` must therefore hold at least
    ``n_ahead - 1`` rows whenever the model has an exogenous block.
    """
    if n_ahead < 1:
        raise ValueError("n_ahead must be >= 1")
    k, m, p, s = coef.k, coef.m, coef.p, coef.s
    buf = _history_values(history, coef)
    has_x = m > 0 and s > 0
    if has_x and n_ahead > 1:
        newx = None if newx is None else np.atleast_2d(np.asarray(newx, dtype=float))
        if newx is None or newx.shape[0] < n_ahead - 1 or newx.shape[1] != m:
            raise MissingExogenousFutures(
                f"{n_ahead}-step VARX forecasts need {n_ahead - 1} future exogenous rows of width {m}")
    rows = [r for r in buf]
    out = np.empty((n_ahead, k))
    for j in range(n_ahead):
        z = predictor_vector(np.array(rows).reshape(-1, k + m), k, p, s) if rows else np.ones(1)
        yhat = coef.b @ z
        out[j] = yhat
        if j + 1 < n_ahead:
            xrow = newx[j] if has_x else np.zeros(m)
            rows.append(np.concatenate([yhat, xrow]))
            if len(rows) > max(p, s):
                rows.pop(0)
    return out


def ma_coefficients(coef: CoefficientSet, n_periods: int) -> np.ndarray:
    """``Gamma_i = J A^i J'`` for ``i = 0..n_periods-1``, shape ``(n, k, k)``."""
    k, p = coef.k, coef.p
    out = np.empty((n_periods, k, k))
    if p == 0:
        out[:] = 0.0
        out[0] = np.eye(k)
        return out
    a = to_companion(coef.phi, p).a
    power = np.eye(k * p)
    for i in range(n_periods):
        out[i] = power[:k, :k]
        power = a @ power
    return out


def generate_irf(coef: CoefficientSet, sigma_u, shock_series: int, shock_size: float = 1.0,
                 n_periods: int = 10, unit_variance: bool = False) -> np.ndarray:
    """Orthogonalized responses (rows = horizons ``0..n_periods-1``) to a shock in ``shock_series``.

    With ``unit_variance`` the impact matrix is ``C D^-1`` (``D`` the diagonal
    of the Cholesky factor ``C``), so the shocked series moves by exactly
    ``shock_size`` on impact.
    """
    if coef.m > 0 and coef.s > 0:
        raise NonVarModel("impulse responses are defined for VAR models only")
    if not 0 <= shock_series < coef.k:
        raise IndexError(f"shock_series must lie in [0, {coef.k})")
    chol = innovation_factor(sigma_u)
    if coef.p > 0:
        ok, radius = is_stationary(to_companion(coef.phi, coef.p))
        if not ok:
            warnings.warn(f"non-stationary system (radius {radius:.4g}); responses do not decay",
                          RuntimeWarning, stacklevel=2)
    impact = chol / np.diag(chol) if unit_variance else chol
    shock = impact[:, shock_series] * shock_size
    return np.einsum("nij,j->ni", ma_coefficients(coef, n_periods), shock)


def grid_position(index: int, n: int) -> str:
    if n > 1 and index == 0:
        return "at_max_boundary"
    if n > 1 and index == n - 1:
        return "at_min_boundary"
    return "interior"


def export_diagnostics(report) -> dict:
    """Plot-ready sparsity grid, lambda curve and grid-position flag of a CV report."""
    coef = report.final_coefficients
    v = report.optimal_variant
    lams = report.lambda_grids[v]
    curve = [
        {"lambda": float(l), "msfe": float(e), "se": float(s)}
        for l, e, s in zip(lams, report.per_lambda_msfe[v], report.per_lambda_se[v])
    ]
    flag = grid_position(report.optimal_index, len(lams))
    if flag == "at_min_boundary":
        warnings.warn("selected lambda is the smallest on the grid; consider a deeper grid",
                      UserWarning, stacklevel=2)
    return {
        "sparsity_grid": np.asarray(coef.b[:, 1:]).tolist(),
        "lambda_curve": curve,
        "grid_position_flag": flag,
    }
