"""Penalty grids, rolling cross-validation and out-of-sample evaluation.

Index conventions (0-based data rows ``0 .. T-1``):

* cross-validation targets are rows ``t1 .. t2-1``;
* out-of-sample targets are rows ``t2 .. T-1``;
* the forecast of target ``tau`` is made at origin ``tau - h`` from rows
  ``0 .. tau-h`` only (an expanding window).

A grid cell is one ``(penalty variant, lambda)`` pair. Cells run
concurrently; inside a cell the origins are visited in time order and each
fit warm-starts from the previous origin's solution.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .analysis import forecast
from .benchmarks import naive_benchmarks, varx_forecast_eval
from .core import (
    CoefficientSet,
    LagRegression,
    ModelSpec,
    SeriesMatrix,
    lag_regression,
    minnesota_shift,
    predictor_vector,
)
from .exceptions import InsufficientData, MaxIterExceeded, UsageError
from .penalties import GroupPartition, build_partition, group_norms
from .refit import refit
from .solvers import Problem, SolverOptions, fit_penalized


@dataclass(frozen=True)
class LambdaGrid:
    values: np.ndarray
    depth: float
    lambda_max: float
    source: str


@dataclass
class CvReport:
    optimal_lambda: float
    optimal_index: int
    optimal_alpha: float
    optimal_gamma: float
    optimal_variant: int
    in_sample_msfe: float
    oos_msfe: float
    per_lambda_msfe: np.ndarray
    per_lambda_se: np.ndarray
    lambda_grids: np.ndarray
    variants: list
    benchmark_msfe: dict
    final_coefficients: CoefficientSet
    oos_forecasts: np.ndarray = field(repr=False, default=None)
    spec: Optional[ModelSpec] = field(repr=False, default=None)


def _root_bound(c2: np.ndarray, part: GroupPartition, mix: float) -> float:
    if mix <= 0.0 or not part.groups or not part.roots.any():
        return np.inf
    norms = group_norms(c2, part)[part.roots]
    return float(np.max(norms / (mix * part.weights[part.roots])))


def _l1_bound(c2: np.ndarray, part: GroupPartition, mix: float) -> float:
    if mix <= 0.0 or part.l1_weights is None:
        return np.inf
    return float(np.max(np.abs(c2) / (mix * part.l1_weights)))


def theoretical_lambda_max(reg: LagRegression, partition: GroupPartition,
                           alpha: Optional[float] = None) -> float:
    """A penalty at which the all-zero lag block is optimal.

    With the raw sum-of-squares loss the gradient at zero is ``-2 Y~ Z~'``.
    Zero is optimal as soon as that gradient lies in the dual ball of either
    the root groups (which cover every coefficient once) or the L1 part;
    the smaller of the two sufficient bounds is returned.
    """
    c2 = 2.0 * Problem(reg, partition).C
    if c2.size == 0 or not np.any(c2):
        return 0.0
    mix_g, mix_l1 = partition.mixing(alpha)
    bound = min(_root_bound(c2, partition, mix_g), _l1_bound(c2, partition, mix_l1))
    if not np.isfinite(bound):
        raise UsageError("penalty has no component that can zero the coefficients")
    return bound


def _is_zero(fit: CoefficientSet) -> bool:
    return not np.any(fit.b[:, 1:])


def bisect_lambda_max(reg: LagRegression, partition: GroupPartition, alpha: Optional[float] = None,
                      coarse: Optional[float] = None, eps: Optional[float] = None,
                      opts: SolverOptions = SolverOptions(), problem: Optional[Problem] = None) -> float:
    """Tighten ``coarse`` by bisection until ``lambda_high - lambda_low <= eps``.

    ``lambda_high`` always produces an all-zero lag block and
    ``lambda_low`` never does; ``lambda_high`` is returned. Each trial fit
    starts from zero, which decides the zero/nonzero question exactly.
    """
    problem = problem or Problem(reg, partition)
    if coarse is None:
        coarse = theoretical_lambda_max(reg, partition, alpha)
    if coarse <= 0.0:
        return 0.0
    if eps is None:
        eps = 1e-5 * coarse
    cold = replace(opts, warm_start=None)
    hi, lo = float(coarse), 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        if not _is_zero(fit_penalized(reg, partition, hi, alpha, cold, problem=problem)):
            raise UsageError("coarse bound does not zero the coefficients")
        while hi - lo > eps:
            lam = 0.5 * (hi + lo)
            if _is_zero(fit_penalized(reg, partition, lam, alpha, cold, problem=problem)):
                hi = lam
            else:
                lo = lam
    return hi


def lambda_grid(lambda_max: float, depth: float, n: int, source: str = "theoretical_then_bisected") -> LambdaGrid:
    """Geometric grid from ``lambda_max`` down to ``lambda_max / depth``."""
    if n == 1:
        values = np.array([lambda_max])
    else:
        values = lambda_max * depth ** (-np.arange(n) / (n - 1))
    return LambdaGrid(values, depth, lambda_max, source)


def one_se_select(msfe, se) -> int:
    """Smallest index (largest lambda) whose MSFE is within one SE of the minimum."""
    msfe, se = np.asarray(msfe, dtype=float), np.asarray(se, dtype=float)
    best = int(np.argmin(msfe))
    return int(np.flatnonzero(msfe <= msfe[best] + se[best])[0])


def _regression(values: np.ndarray, k: int, spec: ModelSpec) -> LagRegression:
    m = values.shape[1] - k
    s = spec.s if m > 0 else 0
    delta = spec.h if spec.direct else 1
    return lag_regression(values, k, spec.p, s, delta)


def _fit(values: np.ndarray, k: int, spec: ModelSpec, part: GroupPartition, lam: float,
         opts: SolverOptions, warm=None) -> CoefficientSet:
    """Penalized fit on ``values`` with the Minnesota shift and optional refit applied."""
    reg = _regression(values, k, spec)
    shift = spec.mn and any(spec.c)
    if shift:
        reg = minnesota_shift(reg, spec.c, "forward")
    run = replace(opts, warm_start=warm)
    fit = fit_penalized(reg, part, lam, part.alpha, run)
    if shift:
        fit = minnesota_shift(fit, spec.c, "inverse")
    if spec.rvar != "none":
        raw = _regression(values, k, spec)
        refitted = refit(raw, fit, spec.rvar)
        fit = fit.with_b(refitted.b, extra={**fit.extra, "refit": spec.rvar,
                                            "penalized_b": np.array(fit.b)})
    return fit


def _warm_from(fit: Optional[CoefficientSet], spec: ModelSpec):
    if fit is None:
        return None
    b = fit.extra.get("penalized_b", fit.b)
    if spec.mn and any(spec.c):
        b = np.array(b)
        rows = np.arange(fit.k)
        b[rows, 1 + rows] -= np.asarray(spec.c)
    return b


def _point_forecast(fit: CoefficientSet, train: np.ndarray, k: int, spec: ModelSpec) -> np.ndarray:
    if spec.h > 1 and spec.recursive:
        return forecast(fit, train[:, :k], spec.h)[-1]
    return fit.b @ predictor_vector(train, k, fit.p, fit.s)


def origin_forecasts(values: np.ndarray, k: int, spec: ModelSpec, part: GroupPartition, lam: float,
                     targets, opts: SolverOptions, fits_out: Optional[list] = None) -> np.ndarray:
    """Forecasts for each target row, fitting on rows ``0 .. tau-h`` (warm-started in order).

    Only ``values[: tau - h + 1]`` is read for target ``tau``. Fitted
    coefficient sets are appended to ``fits_out`` when it is given.
    """
    out = np.empty((len(targets), k))
    prev = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        for n, tau in enumerate(targets):
            train = values[: tau - spec.h + 1]
            fit = _fit(train, k, spec, part, lam, opts, _warm_from(prev, spec))
            out[n] = _point_forecast(fit, train, k, spec)
            prev = fit
            if fits_out is not None:
                fits_out.append(fit)
    return out


def grid_for_variant(values: np.ndarray, k: int, spec: ModelSpec, part: GroupPartition,
                     opts: SolverOptions) -> LambdaGrid:
    """Lambda grid computed from ``values`` (the data available at the first origin)."""
    depth, n = spec.gran
    if spec.own_lambdas:
        vals = np.asarray(spec.lambdas, dtype=float)
        return LambdaGrid(vals, depth, float(vals.max()), "user_supplied")
    reg = _regression(values, k, spec)
    if spec.mn and any(spec.c):
        reg = minnesota_shift(reg, spec.c, "forward")
    problem = Problem(reg, part)
    coarse = theoretical_lambda_max(reg, part, part.alpha)
    lmax = bisect_lambda_max(reg, part, part.alpha, coarse, opts=opts, problem=problem)
    if lmax <= 0.0:
        lmax = 1.0
    return lambda_grid(lmax, depth, n)


def resolve_threads(threads: Optional[int] = None) -> int:
    env = os.environ.get("SPARSEVAR_THREADS")
    if env:
        threads = int(env)
    if not threads:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def _msfe(pred: np.ndarray, actual: np.ndarray) -> tuple[float, float, np.ndarray]:
    errs = np.sum((pred - actual) ** 2, axis=1)
    n = len(errs)
    se = float(np.std(errs, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(errs.mean()), se, errs


def _partitions(data: SeriesMatrix, spec: ModelSpec) -> list:
    s = spec.s if data.m > 0 else 0
    return [build_partition(v, data.k, data.m, spec.p, s) for v in spec.penalty_variants()]


def rolling_cv(data: SeriesMatrix, spec: ModelSpec, opts: SolverOptions = SolverOptions(),
               threads: Optional[int] = None) -> CvReport:
    """Select lambda (and alpha or gamma) by rolling CV, then evaluate out of sample."""
    spec = spec.resolve(data)
    values, k, h, T = data.values, data.k, spec.h, data.T
    if spec.t2 + h > T:
        raise InsufficientData(f"t2 + h = {spec.t2 + h} exceeds T = {T}")
    cv_targets = list(range(spec.t1, spec.t2))
    oos_targets = list(range(spec.t2, T))
    first_origin = cv_targets[0] - h
    top = max(spec.p, spec.s if data.m else 0)
    offset = top + (h - 1 if spec.direct else 0) if top else 0
    if first_origin + 1 <= offset:
        raise InsufficientData("the first cross-validation origin leaves no training sample")
    parts = _partitions(data, spec)
    grids = [grid_for_variant(values[: first_origin + 1], k, spec, part, opts) for part in parts]
    n_lam = len(grids[0].values)
    cells = [(v, i) for v in range(len(parts)) for i in range(n_lam)]
    actual_cv = values[cv_targets, :k]

    def run(cell):
        v, i = cell
        pred = origin_forecasts(values, k, spec, parts[v], grids[v].values[i], cv_targets, opts)
        return _msfe(pred, actual_cv)[:2]

    workers = min(resolve_threads(threads), len(cells))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    msfe = np.array([r[0] for r in results]).reshape(len(parts), n_lam)
    se = np.array([r[1] for r in results]).reshape(len(parts), n_lam)

    best_v = int(np.argmin(msfe.min(axis=1)))
    best_i = one_se_select(msfe[best_v], se[best_v]) if spec.one_se else int(np.argmin(msfe[best_v]))
    lam = float(grids[best_v].values[best_i])
    part = parts[best_v]

    pred_oos = origin_forecasts(values, k, spec, part, lam, oos_targets, opts)
    oos_msfe = _msfe(pred_oos, values[oos_targets, :k])[0]

    window = (spec.t2, T)
    naive = naive_benchmarks(data, window, h, trim=offset)
    bench = {"mean": naive["mean_msfe"], "rw": naive["rw_msfe"]}
    if spec.ic:
        for crit in ("AIC", "BIC"):
            errs = varx_forecast_eval(data, spec.p, spec.s if data.m else 0, window, crit, h)
            bench[crit.lower()] = float(errs.mean())

    final = estimate_fixed(data, replace(spec, own_lambdas=True, lambdas=(lam,),
                                         alpha=(part.alpha,), gamma=(part.gamma,)), opts)[0]
    return CvReport(
        optimal_lambda=lam, optimal_index=best_i, optimal_alpha=part.alpha,
        optimal_gamma=part.gamma, optimal_variant=best_v,
        in_sample_msfe=float(msfe[best_v, best_i]), oos_msfe=oos_msfe,
        per_lambda_msfe=msfe, per_lambda_se=se,
        lambda_grids=np.array([g.values for g in grids]),
        variants=[(p.alpha, p.gamma) for p in parts],
        benchmark_msfe=bench, final_coefficients=final, oos_forecasts=pred_oos, spec=spec,
    )


def estimate_fixed(data: SeriesMatrix, spec: ModelSpec,
                   opts: SolverOptions = SolverOptions()) -> list:
    """Full-sample fits, one per supplied lambda, each started from zero.

    The first alpha (sparse-group kinds) or gamma (Tapered) of ``spec`` is used.
    """
    if not spec.lambdas or any(x <= 0 for x in spec.lambdas):
        raise UsageError("estimate_fixed needs a non-empty list of positive lambdas")
    spec = spec.resolve(data)
    part = _partitions(data, spec)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        return [_fit(data.values, data.k, spec, part, lam, replace(opts, warm_start=None))
                for lam in spec.lambdas]
