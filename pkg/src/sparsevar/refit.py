"""Post-selection refits of a penalized VAR support.

All routines work on the seemingly-unrelated-regressions form: series ``i``
is regressed on its own active rows of ``Z`` (``D_i = Z[active_i]'``),
stacked as ``vec(Y') = (+)_i D_i phi_i + (C kron I_T) v`` with ``v`` white
and ``Sigma_u = C C'``. Generalized least squares is solved as a
generalized linear least-squares problem: per-series QR, the transformed
covariance blocks ``W``, one RQ factorization and triangular solves. No
matrix is inverted explicitly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import qr, solve_triangular

from .benchmarks import ridge_delta
from .core import CoefficientSet, LagRegression
from .exceptions import (
    EmptySupport,
    MaxIterExceeded,
    NonVarModel,
    NotSPD,
    RankDeficient,
    SingularW22,
    UsageError,
)


@dataclass(frozen=True)
class RestrictionMap:
    """Active columns of ``[nu | Phi]`` per row; column 0 is the intercept."""

    active: tuple
    n_cols: int
    eps1: float = 0.0

    def __post_init__(self):
        rows = []
        for cols in self.active:
            cols = np.unique(np.asarray(cols, dtype=np.int64))
            if cols.size and (cols[0] < 0 or cols[-1] >= self.n_cols):
                raise UsageError(f"active columns must lie in [0, {self.n_cols})")
            rows.append(cols)
        object.__setattr__(self, "active", tuple(rows))
        if self.r < 1:
            raise EmptySupport("restriction has no active coefficient")

    @property
    def k(self) -> int:
        return len(self.active)

    @property
    def r(self) -> int:
        return int(sum(len(a) for a in self.active))

    @property
    def counts(self) -> list:
        return [len(a) for a in self.active]

    def mask(self) -> np.ndarray:
        out = np.zeros((self.k, self.n_cols), dtype=bool)
        for i, cols in enumerate(self.active):
            out[i, cols] = True
        return out

    @classmethod
    def full(cls, k: int, n_cols: int) -> "RestrictionMap":
        return cls(tuple(np.arange(n_cols) for _ in range(k)), n_cols)

    @classmethod
    def from_mask(cls, mask, eps1: float = 0.0) -> "RestrictionMap":
        mask = np.asarray(mask, dtype=bool)
        return cls(tuple(np.flatnonzero(row) for row in mask), mask.shape[1], eps1)


def restriction_from_fit(b, eps1: float = 0.0, intercept: bool = True) -> RestrictionMap:
    """Support ``{|b_ij| > eps1}`` of the lag block, plus the intercepts."""
    if eps1 < 0:
        raise UsageError("eps1 must be non-negative")
    if isinstance(b, CoefficientSet):
        if b.m > 0 and b.s > 0:
            raise NonVarModel("refitting covers VAR coefficients only")
        b = b.b
    b = np.asarray(b, dtype=float)
    mask = np.abs(b) > eps1
    mask[:, 0] = intercept
    if not mask.any():
        raise EmptySupport(f"no coefficient exceeds eps1={eps1}")
    return RestrictionMap.from_mask(mask, eps1)


def _check_reg(reg: LagRegression, rmap: RestrictionMap) -> None:
    if reg.m > 0 and reg.s > 0:
        raise NonVarModel("refitting covers VAR coefficients only")
    if rmap.k != reg.k or rmap.n_cols != reg.n_coef:
        raise UsageError(
            f"restriction is {rmap.k} x {rmap.n_cols}, regression needs {reg.k} x {reg.n_coef}")
    for i, n in enumerate(rmap.counts):
        if n >= reg.teff:
            raise RankDeficient(f"row {i} has {n} active columns but only {reg.teff} observations")


def _scatter(reg: LagRegression, rmap: RestrictionMap, phis, **meta) -> CoefficientSet:
    b = np.zeros((reg.k, reg.n_coef))
    for i, (cols, phi) in enumerate(zip(rmap.active, phis)):
        b[i, cols] = phi
    return CoefficientSet(b, reg.k, reg.m, reg.p, reg.s, **meta)


def _row_ls(d: np.ndarray, y: np.ndarray) -> np.ndarray:
    if d.shape[1] == 0:
        return np.zeros(0)
    n = d.shape[1]
    colnorm = np.linalg.norm(d, axis=0)
    delta = ridge_delta(n + 1)
    aug = np.vstack([np.column_stack([d, y]),
                     np.column_stack([np.diag(np.sqrt(delta) * colnorm), np.zeros(n)])])
    r = np.linalg.qr(aug, mode="r")
    diag = np.abs(np.diag(r[:n, :n]))
    if np.any(diag <= 2.0 * np.sqrt(delta) * colnorm) or np.any(colnorm == 0):
        raise RankDeficient("restricted design is rank deficient")
    return solve_triangular(r[:n, :n], r[:n, n], lower=False)


def relaxed_ls(reg: LagRegression, rmap: RestrictionMap) -> CoefficientSet:
    """Row-by-row least squares on the active columns; zero elsewhere."""
    _check_reg(reg, rmap)
    phis = [_row_ls(reg.z[cols].T, reg.y[i]) for i, cols in enumerate(rmap.active)]
    return _scatter(reg, rmap, phis, struct="RLS")


class GlsWorkspace:
    """Per-series QR factors and rotated responses, fixed across covariance updates."""

    def __init__(self, reg: LagRegression, rmap: RestrictionMap):
        _check_reg(reg, rmap)
        self.reg, self.rmap = reg, rmap
        T = reg.teff
        self.T = T
        self.qt, self.qh, self.rr, self.yt, self.yh = [], [], [], [], []
        for i, cols in enumerate(rmap.active):
            d = reg.z[cols].T
            q, r = qr(d, mode="full")
            ri = len(cols)
            if ri:
                # positive diagonal keeps the factor unique
                sign = np.where(np.diag(r[:ri, :ri]) < 0, -1.0, 1.0)
                q[:, :ri] *= sign
                r[:ri] *= sign[:, None]
            self.qt.append(q[:, :ri])
            self.qh.append(q[:, ri:])
            self.rr.append(r[:ri, :ri])
            self.yt.append(q[:, :ri].T @ reg.y[i])
            self.yh.append(q[:, ri:].T @ reg.y[i])
        self.r = rmap.r
        self.sizes_t = [len(c) for c in rmap.active]
        self.sizes_h = [T - n for n in self.sizes_t]
        self.ytilde = np.concatenate(self.yt)
        self.yhat = np.concatenate(self.yh)

    def w_blocks(self, chol: np.ndarray):
        """``W21``, ``W22``, ``W11``, ``W12`` of ``Q'(C kron I_T)Q`` assembled blockwise."""
        k = len(self.qt)
        out = []
        for left, right in ((self.qh, self.qt), (self.qh, self.qh),
                            (self.qt, self.qt), (self.qt, self.qh)):
            rows = []
            for i in range(k):
                row = []
                for j in range(k):
                    if chol[i, j] == 0.0:
                        row.append(np.zeros((left[i].shape[1], right[j].shape[1])))
                    else:
                        row.append(chol[i, j] * (left[i].T @ right[j]))
                rows.append(row)
            out.append(np.block(rows) if k else np.zeros((0, 0)))
        return out

    def solve(self, chol: np.ndarray, iteration: int = 0) -> list:
        """GLS coefficients for innovation factor ``chol``, one array per series."""
        r = self.r
        w21, w22t, w11, w12t = self.w_blocks(chol)
        lower = np.hstack([w21, w22t])
        upper = np.hstack([w11, w12t])
        nh = lower.shape[0]
        if nh:
            ptilde = rq_orthogonal(lower)
            w22 = (lower @ ptilde[:, r:])
            w22 = np.triu(w22)
            w12 = upper @ ptilde[:, r:]
            diag = np.abs(np.diag(w22))
            scale = max(float(diag.max(initial=0.0)), np.finfo(float).tiny)
            if not np.all(np.isfinite(w22)) or np.any(diag <= nh * np.finfo(float).eps * scale):
                raise SingularW22(iteration)
            vhat = solve_triangular(w22, self.yhat, lower=False)
            vstar = w12 @ vhat
        else:
            vstar = np.zeros(r)
        rhs = self.ytilde - vstar
        phis, start = [], 0
        for ri, rmat in zip(self.sizes_t, self.rr):
            seg = rhs[start : start + ri]
            phis.append(solve_triangular(rmat, seg, lower=False) if ri else np.zeros(0))
            start += ri
        return phis

    def residuals(self, phis) -> np.ndarray:
        """``T x k`` residual matrix in the original coordinates."""
        reg = self.reg
        cols = []
        for i, (act, phi) in enumerate(zip(self.rmap.active, phis)):
            cols.append(reg.y[i] - phi @ reg.z[act] if len(act) else reg.y[i].copy())
        return np.column_stack(cols)


def rq_orthogonal(m: np.ndarray) -> np.ndarray:
    """Orthogonal ``P`` with ``m P = [0, T]``, ``T`` upper triangular (``m`` is ``a x n``, ``a <= n``).

    Obtained from the QR factorization of the row-reversed transpose:
    ``(J_a m)' = Q0 R0`` gives ``P = Q0 J_n``.
    """
    q0, _ = qr(m[::-1].T, mode="full")
    return q0[:, ::-1]


def covariance_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, or ``R'`` from ``QR(D^1/2 U')`` when ``sigma`` is not positive definite."""
    sigma = 0.5 * (sigma + sigma.T)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    u, d, _ = np.linalg.svd(sigma)
    d = np.clip(d, 0.0, None)
    _, rmat = np.linalg.qr(np.sqrt(d)[:, None] * u.T)
    return rmat.T


def _sigma_from_residuals(resid: np.ndarray, p: int, k: int) -> np.ndarray:
    T = resid.shape[0]
    denom = T - p * k
    if denom <= 0:
        denom = T
    sigma = resid.T @ resid / denom
    return 0.5 * (sigma + sigma.T)


def weighted_relaxed_ls(reg: LagRegression, rmap: RestrictionMap, variances) -> CoefficientSet:
    """Feasible GLS with ``Sigma = diag(variances)``; decouples into :func:`relaxed_ls`."""
    variances = np.asarray(variances, dtype=float)
    if variances.shape != (reg.k,) or not np.all(variances > 0) or not np.all(np.isfinite(variances)):
        raise UsageError("variances must be k positive finite numbers")
    ws = GlsWorkspace(reg, rmap)
    phis = ws.solve(np.diag(np.sqrt(variances)))
    return _scatter(reg, rmap, phis, struct="WLS")


def ifgls(reg: LagRegression, rmap: RestrictionMap, sigma0=None, eps1: float = 0.0,
          eps2: float = 1e-4, max_iter: int = 25):
    """Iterated feasible GLS on a fixed support; returns ``(coefficients, sigma_hat)``.

    Each pass solves GLS with the current factor of ``Sigma``, re-estimates
    ``Sigma`` from the residuals with denominator ``T - p k`` and stops once
    the spectral-norm change is at most ``eps2``. ``eps1`` is recorded only;
    the support is ``rmap``.
    """
    if max_iter < 1:
        raise UsageError("max_iter must be >= 1")
    ws = GlsWorkspace(reg, rmap)
    sigma = np.eye(reg.k) if sigma0 is None else np.asarray(sigma0, dtype=float)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("initial covariance is not positive definite") from exc
    converged = False
    for it in range(1, max_iter + 1):
        phis = ws.solve(chol, it)
        new = _sigma_from_residuals(ws.residuals(phis), reg.p, reg.k)
        change = float(np.linalg.norm(new - sigma, 2))
        sigma = new
        if change <= eps2:
            converged = True
            break
        chol = covariance_factor(sigma)
    if not converged and max_iter > 1:
        warnings.warn(f"IFGLS did not converge in {max_iter} iterations", MaxIterExceeded,
                      stacklevel=2)
    coef = _scatter(reg, rmap, phis, struct="IFGLS", converged=converged or max_iter == 1,
                    n_iter=it, extra={"eps1": eps1})
    return coef, sigma


def oracle_gls(reg: LagRegression, rmap: RestrictionMap, sigma_true) -> CoefficientSet:
    """One GLS pass with the true innovation covariance."""
    sigma_true = np.asarray(sigma_true, dtype=float)
    try:
        chol = np.linalg.cholesky(sigma_true)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("covariance is not positive definite") from exc
    phis = GlsWorkspace(reg, rmap).solve(chol)
    return _scatter(reg, rmap, phis, struct="OracleGLS")


def refit(reg: LagRegression, coef: CoefficientSet, method: str, eps1: float = 0.0,
          variances: Optional[np.ndarray] = None, sigma0=None) -> CoefficientSet:
    """Dispatch used by cross-validation and the command line."""
    rmap = restriction_from_fit(coef, eps1)
    if method == "rls":
        return relaxed_ls(reg, rmap)
    if method == "wls":
        if variances is None:
            variances = reg.y.var(axis=1)
        return weighted_relaxed_ls(reg, rmap, variances)
    if method == "ifgls":
        return ifgls(reg, rmap, sigma0, eps1)[0]
    raise UsageError(f"unknown refit method {method!r}")
