"""Fixed-lambda solvers for the penalized least-squares objective

    ||Y - nu 1' - W Z||_F^2 + lam * P(W)

The loss is the raw sum of squares. The intercept is profiled out by
centering ``Y`` and the lag rows of ``Z``; ``nu = ybar - W zbar`` afterwards.

Algorithm per structure:

==========================  ==========================================
Basic                       cyclic coordinate descent (compiled kernel)
Lag, OwnOther               block coordinate descent
SparseLag, SparseOO         proximal gradient descent
EFX, HVAR*, Tapered         monotone FISTA with adaptive restart
==========================  ==========================================
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .core import CoefficientSet, LagRegression
from .exceptions import MaxIterExceeded, NonFinite, UsageError
from .penalties import GroupPartition, group_norms, prox

BCD_KINDS = ("Lag", "OwnOther")
PGD_KINDS = ("SparseLag", "SparseOO")


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 10000
    tol: float = 1e-4
    warm_start: Optional[object] = None
    step_rule: str = "fixed_by_lipschitz"

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")
        if self.step_rule not in ("fixed_by_lipschitz", "backtracking"):
            raise UsageError(f"unknown step rule {self.step_rule!r}")


class Problem:
    """Centered sufficient statistics of one regression, shared along a path."""

    def __init__(self, reg: LagRegression, partition: GroupPartition):
        if partition.shape != (reg.k, reg.n_coef - 1):
            raise UsageError(
                f"partition built for shape {partition.shape}, regression has "
                f"({reg.k}, {reg.n_coef - 1})"
            )
        self.reg = reg
        self.partition = partition
        self.ybar = reg.y.mean(axis=1)
        self.zbar = reg.z[1:].mean(axis=1)
        self.yc = reg.y - self.ybar[:, None]
        self.zc = reg.z[1:] - self.zbar[:, None]
        self.G = np.ascontiguousarray(self.zc @ self.zc.T)
        self.C = np.ascontiguousarray(self.yc @ self.zc.T)
        self.yy = float(np.sum(self.yc * self.yc))
        self._lipschitz = None
        self._blocks = None

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the loss gradient, ``2 * eigmax(G)``."""
        if self._lipschitz is None:
            top = np.linalg.eigvalsh(self.G)[-1] if self.G.size else 0.0
            self._lipschitz = max(2.0 * float(top), np.finfo(float).tiny)
        return self._lipschitz

    def loss(self, w: np.ndarray) -> float:
        return float(np.sum((w @ self.G) * w) - 2.0 * np.sum(w * self.C) + self.yy)

    def grad(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * (w @ self.G - self.C)

    def penalty(self, w: np.ndarray, lam: float, alpha: float) -> float:
        part = self.partition
        mix_g, mix_l1 = part.mixing(alpha)
        total = 0.0
        if mix_g and part.groups:
            total += mix_g * float(group_norms(w, part) @ part.weights)
        if mix_l1 and part.l1_weights is not None:
            total += mix_l1 * float(np.sum(part.l1_weights * np.abs(w)))
        return lam * total

    def objective(self, w: np.ndarray, lam: float, alpha: float) -> float:
        return self.loss(w) + self.penalty(w, lam, alpha)

    def coefficients(self, w, lam, alpha, converged=True, n_iter=0) -> CoefficientSet:
        nu = self.ybar - w @ self.zbar
        reg, part = self.reg, self.partition
        return CoefficientSet(
            b=np.column_stack([nu, w]), k=reg.k, m=reg.m, p=reg.p, s=reg.s,
            lam=float(lam), alpha=float(alpha), gamma=part.gamma, struct=part.kind,
            converged=converged, n_iter=n_iter,
            extra={"objective": self.objective(w, lam, alpha)},
        )

    def blocks(self):
        """Eigen-decomposed curvature of every group, for block coordinate descent."""
        if self._blocks is None:
            part = self.partition
            ncols = part.shape[1]
            out = []
            for g, rect in zip(part.groups, part.rect):
                if rect is not None:
                    rows, cols = rect
                    d, u = np.linalg.eigh(self.G[np.ix_(cols, cols)])
                    out.append(("rect", rows, cols, np.maximum(d, 0.0), u))
                else:
                    rows, cols = np.divmod(g, ncols)
                    same = rows[:, None] == rows[None, :]
                    h = np.where(same, self.G[np.ix_(cols, cols)], 0.0)
                    d, u = np.linalg.eigh(h)
                    out.append(("vec", rows, cols, np.maximum(d, 0.0), u, h))
            self._blocks = out
        return self._blocks


def _initial_w(problem: Problem, warm) -> np.ndarray:
    shape = problem.partition.shape
    if warm is None:
        return np.zeros(shape)
    b = warm.b if isinstance(warm, CoefficientSet) else np.asarray(warm, dtype=float)
    if b.shape == (shape[0], shape[1] + 1):
        b = b[:, 1:]
    if b.shape != shape:
        raise UsageError(f"warm start has shape {b.shape}, expected {shape}")
    return np.array(b, dtype=float)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    delta = np.max(np.abs(new - old)) if new.size else 0.0
    if delta == 0.0:
        return 0.0
    scale = np.max(np.abs(new))
    return delta / scale if scale > 0 else np.inf


def _group_radius(a2: np.ndarray, d: np.ndarray, c: float) -> float:
    """Root ``nu > 0`` of ``sum_j a2_j / (2 d_j nu + c)^2 = 1``.

    The left side is convex and decreasing, so Newton from ``nu = 0`` climbs
    monotonically to the root. A bisection bracket guards degenerate curvature.
    """
    d = np.maximum(d, 1e-12 * max(float(d.max(initial=0.0)), 1e-300))
    nu = 0.0
    for _ in range(200):
        den = 2.0 * d * nu + c
        g = float(np.sum(a2 / den**2)) - 1.0
        if g <= 1e-15:
            break
        dg = -4.0 * float(np.sum(d * a2 / den**3))
        step = -g / dg
        nu += step
        if step <= 1e-15 * max(nu, 1e-300):
            break
    return nu


def _bcd(problem: Problem, w: np.ndarray, lam: float, opts: SolverOptions):
    part = problem.partition
    G = problem.G
    resid = problem.C - w @ G
    blocks = problem.blocks()
    thresholds = lam * part.weights
    for sweep in range(1, opts.max_iter + 1):
        w_old = w.copy()
        for blk, c in zip(blocks, thresholds):
            if blk[0] == "rect":
                _, rows, cols, d, u = blk
                x = w[np.ix_(rows, cols)]
                gb = G[np.ix_(cols, cols)]
                q = resid[np.ix_(rows, cols)] + x @ gb
                qn = 2.0 * np.linalg.norm(q)
                if qn <= c:
                    new = np.zeros_like(x)
                elif c == 0.0:
                    new = np.linalg.lstsq(gb, q.T, rcond=None)[0].T
                else:
                    qh = 2.0 * (q @ u)
                    nu = _group_radius(np.sum(qh * qh, axis=0), d, c)
                    new = ((qh * nu / (2.0 * d * nu + c)) @ u.T)
                diff = new - x
                if np.any(diff):
                    w[np.ix_(rows, cols)] = new
                    resid[rows] -= diff @ G[cols]
            else:
                _, rows, cols, d, u, h = blk
                x = w[rows, cols]
                q = resid[rows, cols] + h @ x
                qn = 2.0 * np.linalg.norm(q)
                if qn <= c:
                    new = np.zeros_like(x)
                elif c == 0.0:
                    new = np.linalg.lstsq(h, q, rcond=None)[0]
                else:
                    qh = 2.0 * (u.T @ q)
                    nu = _group_radius(qh * qh, d, c)
                    new = u @ (qh * nu / (2.0 * d * nu + c))
                diff = new - x
                if np.any(diff):
                    w[rows, cols] = new
                    for r in np.unique(rows):
                        sel = rows == r
                        resid[r] -= diff[sel] @ G[cols[sel]]
        if _rel_change(w, w_old) < opts.tol:
            return w, True, sweep
    return w, False, opts.max_iter


def _cd(problem: Problem, w: np.ndarray, lam: float, opts: SolverOptions):
    part = problem.partition
    pen = np.ascontiguousarray(lam * part.l1_weights, dtype=float)
    w = np.ascontiguousarray(w)
    sweeps, conv = _kernels.lasso_cd_gram(problem.G, problem.C, w, pen, opts.max_iter, opts.tol)
    return w, bool(conv), int(sweeps)


def _pgd(problem: Problem, w: np.ndarray, lam: float, alpha: float, opts: SolverOptions):
    L = problem.lipschitz
    part = problem.partition
    for it in range(1, opts.max_iter + 1):
        new = prox(w - problem.grad(w) / L, part, lam / L, alpha)
        change = _rel_change(new, w)
        w = new
        if change < opts.tol:
            return w, True, it
    return w, False, opts.max_iter


def _fista(problem: Problem, w: np.ndarray, lam: float, alpha: float, opts: SolverOptions):
    """Monotone FISTA; the objective of the returned sequence never increases."""
    L = problem.lipschitz
    part = problem.partition
    x = w
    fx = problem.objective(x, lam, alpha)
    y = x.copy()
    t = 1.0
    plain = True
    for it in range(1, opts.max_iter + 1):
        z = prox(y - problem.grad(y) / L, part, lam / L, alpha)
        fz = problem.objective(z, lam, alpha)
        if not np.isfinite(fz):
            raise NonFinite("objective diverged")
        step = _rel_change(z, y)
        # a plain proximal step from x descends in exact arithmetic, so a
        # rise there is rounding and the step is taken anyway
        if fz <= fx or plain:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            momentum = z - x
            if np.sum((y - z) * momentum) > 0.0:
                # gradient-based adaptive restart
                y, t, plain = z.copy(), 1.0, True
            else:
                y = z + ((t - 1.0) / t_new) * momentum
                t, plain = t_new, False
            x, fx = z, fz
        else:
            # restart momentum from the last accepted point
            y, t, plain = x.copy(), 1.0, True
        if step < opts.tol:
            return x, True, it
    return x, False, opts.max_iter


def _solve(problem: Problem, w0: np.ndarray, lam: float, alpha: float, opts: SolverOptions):
    kind = problem.partition.kind
    if lam == 0.0:
        w = np.linalg.lstsq(problem.zc.T, problem.yc.T, rcond=None)[0].T
        return w, True, 1
    if kind == "Basic":
        return _cd(problem, w0, lam, opts)
    if kind in BCD_KINDS:
        return _bcd(problem, w0, lam, opts)
    if kind in PGD_KINDS:
        return _pgd(problem, w0, lam, alpha, opts)
    return _fista(problem, w0, lam, alpha, opts)


def fit_penalized(
    reg: LagRegression,
    partition: GroupPartition,
    lam: float,
    alpha: Optional[float] = None,
    opts: SolverOptions = SolverOptions(),
    problem: Optional[Problem] = None,
) -> CoefficientSet:
    """Minimize the penalized objective at a single ``lam``.

    Returns the best iterate with ``converged=False`` (and a
    :class:`MaxIterExceeded` warning) when ``opts.max_iter`` is hit.
    """
    if lam < 0:
        raise UsageError("lambda must be non-negative")
    alpha = partition.alpha if alpha is None else alpha
    problem = problem or Problem(reg, partition)
    w0 = _initial_w(problem, opts.warm_start)
    w, converged, n_iter = _solve(problem, w0, float(lam), alpha, opts)
    if not np.all(np.isfinite(w)):
        raise NonFinite("solver produced non-finite coefficients")
    if not converged:
        warnings.warn(
            f"{partition.kind} solver hit max_iter={opts.max_iter} at lambda={lam:g}",
            MaxIterExceeded,
            stacklevel=2,
        )
    return problem.coefficients(w, lam, alpha, converged, n_iter)


def fit_path(
    reg: LagRegression,
    partition: GroupPartition,
    lambdas: Sequence[float],
    alpha: Optional[float] = None,
    opts: SolverOptions = SolverOptions(),
) -> list:
    """Warm-started fits along a strictly decreasing grid of positive lambdas."""
    lambdas = [float(x) for x in lambdas]
    if any(x <= 0 for x in lambdas):
        raise UsageError("path lambdas must be positive")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise UsageError("path lambdas must be strictly decreasing")
    problem = Problem(reg, partition)
    out = []
    warm = opts.warm_start
    for lam in lambdas:
        fit = fit_penalized(
            reg, partition, lam, alpha,
            SolverOptions(opts.max_iter, opts.tol, warm, opts.step_rule),
            problem=problem,
        )
        out.append(fit)
        warm = fit
    return out
