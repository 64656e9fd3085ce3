"""Least-squares VARX by QR, information-criterion lag selection and naive baselines.

Forecast windows are given as half-open ranges of target rows ``[start, end)``
(0-based). The forecast of target row ``tau`` at horizon ``h`` may use data
rows ``0 .. tau-h`` only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .analysis import forecast
from .core import CoefficientSet, LagRegression, SeriesMatrix, lag_regression, predictor_vector
from .exceptions import InsufficientData, RankDeficient, RankDeficientWarning, UsageError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LeastSquaresFit:
    b_hat: np.ndarray
    sigma_u_hat: np.ndarray
    p_used: int
    s_used: int
    k: int
    m: int
    rank_deficient: bool = False

    def coefficients(self) -> CoefficientSet:
        return CoefficientSet(self.b_hat, self.k, self.m, self.p_used, self.s_used, struct="LS")


def ridge_delta(n_cols: int) -> float:
    """Relative size of the stabilizing ridge, ``(q^2 + q + 1) eps``."""
    return (n_cols**2 + n_cols + 1) * EPS


def varx_fit_qr(reg: LagRegression, strict: bool = False) -> LeastSquaresFit:
    """Least squares ``min ||Y - B Z||_F`` from one QR factorization of ``[Z', Y']``.

    A ridge of relative size :func:`ridge_delta` is appended below the ``Z``
    columns. If a diagonal entry of ``R11`` is no larger than the ridge
    itself the design is rank deficient: ``strict`` raises
    :class:`RankDeficient`, otherwise a warning is issued and the
    minimum-norm solution is returned.
    """
    z, y = reg.z, reg.y
    n, k, teff = z.shape[0], y.shape[0], y.shape[1]
    colnorm = np.linalg.norm(z, axis=1)
    delta = ridge_delta(n + k)
    ridge = np.zeros((n, n + k))
    ridge[:, :n] = np.diag(np.sqrt(delta) * colnorm)
    kmat = np.vstack([np.hstack([z.T, y.T]), ridge])
    r = np.linalg.qr(kmat, mode="r")
    r11, r12, r22 = r[:n, :n], r[:n, n:], r[n : n + k, n:]
    if r22.shape[0] < k:
        r22 = np.vstack([r22, np.zeros((k - r22.shape[0], k))])
    diag = np.abs(np.diag(r11))
    deficient = bool(np.any(diag <= 2.0 * np.sqrt(delta) * colnorm)) or np.any(colnorm == 0)
    if deficient:
        if strict:
            raise RankDeficient("design matrix is rank deficient")
        warnings.warn("rank-deficient design; using the minimum-norm solution",
                      RankDeficientWarning, stacklevel=2)
        b = np.linalg.lstsq(z.T, y.T, rcond=None)[0].T
        resid = y - b @ z
        sigma = resid @ resid.T / teff
    else:
        b = solve_triangular(r11, r12, lower=False).T
        sigma = r22.T @ r22 / teff
    sigma = 0.5 * (sigma + sigma.T)
    return LeastSquaresFit(b, sigma, reg.p, reg.s, reg.k, reg.m, deficient)


def _subset(reg: LagRegression, i: int, j: int) -> LagRegression:
    k, m = reg.k, reg.m
    rows = [0] + list(range(1, 1 + k * i)) + list(range(1 + k * reg.p, 1 + k * reg.p + m * j))
    return LagRegression(reg.y, reg.z[rows], reg.offset, k, m, i, j, reg.delta)


def information_criterion(sigma: np.ndarray, k: int, n_params_per_eq: int, n_eff: int,
                          criterion: str) -> float:
    """``logdet(Sigma) + c * k * n_params_per_eq / n_eff`` with ``c = 2`` (AIC) or ``log n_eff`` (BIC)."""
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        logdet = -np.inf
    factor = 2.0 if criterion == "AIC" else np.log(n_eff)
    return float(logdet + factor * k * n_params_per_eq / n_eff)


def select_order_ic(data: SeriesMatrix, p_max: int, s_max: int = 0, criterion: str = "BIC",
                    h: int = 1):
    """Lag orders ``(p, s)`` minimizing AIC or BIC over ``0..p_max`` x ``0..s_max``.

    Every candidate is fitted on the sample trimmed for the largest orders,
    so the criteria compare fits of the same observations. ``h > 1`` selects
    among direct ``h``-step designs. Returns ``(p, s, fit, ic_table)``.
    """
    criterion = criterion.upper()
    if criterion not in ("AIC", "BIC"):
        raise UsageError("criterion must be AIC or BIC")
    if p_max < 0 or s_max < 0:
        raise UsageError("maximum lag orders must be non-negative")
    values = data.values if isinstance(data, SeriesMatrix) else np.asarray(data, dtype=float)
    k = data.k if isinstance(data, SeriesMatrix) else values.shape[1]
    m = values.shape[1] - k
    if m == 0:
        s_max = 0
    T = values.shape[0]
    top = max(p_max, s_max)
    delta = h if top > 0 else 1
    full = lag_regression(values, k, p_max, s_max, delta)
    table = np.full((p_max + 1, s_max + 1), np.inf)
    fits = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        for i in range(p_max + 1):
            for j in range(s_max + 1):
                fit = varx_fit_qr(_subset(full, i, j))
                n_eff = T - max(i, j)
                table[i, j] = information_criterion(fit.sigma_u_hat, k, k * i + m * j + 1, n_eff,
                                                    criterion)
                fits[i, j] = fit
    i, j = np.unravel_index(int(np.argmin(table)), table.shape)
    return int(i), int(j), fits[int(i), int(j)], table


def _targets(window, T: int, h: int) -> range:
    start, end = int(window[0]), int(window[1])
    if not (h <= start < end <= T):
        raise UsageError(f"window [{start}, {end}) must satisfy h <= start < end <= T={T}")
    return range(start, end)


def varx_forecast_eval(data: SeriesMatrix, p_max: int, s_max: int, window, criterion: str = "BIC",
                       h: int = 1) -> np.ndarray:
    """Squared forecast errors of the IC-selected least-squares model at each target in ``window``.

    VAR forecasts iterate the one-step fit ``h`` times; VARX forecasts use a
    direct ``h``-step design.
    """
    values = data.values
    k, m = data.k, data.m
    varx = m > 0 and s_max > 0
    errors = []
    for tau in _targets(window, data.T, h):
        train = values[: tau - h + 1]
        if varx:
            p, s, fit, _ = select_order_ic(SeriesMatrix(train, k, m), p_max, s_max, criterion, h)
            yhat = fit.b_hat @ predictor_vector(train, k, p, s)
        else:
            endo = SeriesMatrix(train[:, :k], k)
            p, s, fit, _ = select_order_ic(endo, p_max, 0, criterion, 1)
            yhat = forecast(fit.coefficients(), train[:, :k], h)[-1]
        errors.append(float(np.sum((yhat - values[tau, :k]) ** 2)))
    return np.asarray(errors)


def naive_benchmarks(data: SeriesMatrix, window, h: int = 1, trim: int = 0) -> dict:
    """Expanding-mean and random-walk forecasts over ``window``.

    The mean forecast averages rows ``trim .. tau-h``; pass the lag offset of
    a competing model to average the same responses that model is fitted to.
    """
    values = data.endog
    mean_err, rw_err = [], []
    for tau in _targets(window, data.T, h):
        origin = tau - h
        if origin < trim:
            raise InsufficientData(f"no observations to average before target row {tau}")
        actual = values[tau]
        mean_err.append(float(np.sum((values[trim : origin + 1].mean(axis=0) - actual) ** 2)))
        rw_err.append(float(np.sum((values[origin] - actual) ** 2)))
    mean_err, rw_err = np.asarray(mean_err), np.asarray(rw_err)
    return {"mean_msfe": float(mean_err.mean()), "rw_msfe": float(rw_err.mean()),
            "mean_errors": mean_err, "rw_errors": rw_err}
