"""Domain types, lag-matrix construction and standardization.

Notation follows the compact regression form ``Y = B Z + U``:

* ``Y`` is ``k x teff``; column ``t`` is the target observation at data row
  ``offset + t``.
* ``Z`` is ``(k*p + m*s + 1) x teff``; row 0 is the intercept, then ``p``
  blocks of ``k`` endogenous lags, then ``s`` blocks of ``m`` exogenous lags.
* ``B = [nu | Phi(1) ... Phi(p) | beta(1) ... beta(s)]`` is ``k x (kp+ms+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InsufficientData,
    NonFinite,
    UnsupportedStructure,
    UsageError,
    ZeroVariance,
)

STRUCTURES = (
    "Basic",
    "Lag",
    "OwnOther",
    "SparseLag",
    "SparseOO",
    "EFX",
    "HVARC",
    "HVAROO",
    "HVARELEM",
    "Tapered",
)
SPARSE_GROUP = ("SparseLag", "SparseOO")
VAR_ONLY = ("HVARC", "HVAROO", "HVARELEM", "Tapered")
VARX_ONLY = ("EFX",)
REFIT_MODES = ("none", "rls", "wls", "ifgls")

_ALIASES = {"EF": "EFX", "SparseOwnOther": "SparseOO", "Own/Other": "OwnOther"}


def canonical_structure(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in STRUCTURES:
        raise UnsupportedStructure(f"unknown penalty structure {name!r}")
    return name


@dataclass(frozen=True)
class SeriesMatrix:
    """Observed data: ``T x (k+m)``, rows in time order, endogenous first."""

    values: np.ndarray
    k: int
    m: int = 0
    labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionMismatch("data must be a 2-d array")
        if self.k < 1 or self.m < 0:
            raise DimensionMismatch(f"need k >= 1 and m >= 0 (got k={self.k}, m={self.m})")
        if values.shape[1] != self.k + self.m:
            raise DimensionMismatch(
                f"data has {values.shape[1]} columns, expected k+m={self.k + self.m}"
            )
        if values.shape[0] < 1:
            raise InsufficientData("data has no rows")
        if not np.all(np.isfinite(values)):
            raise NonFinite("data contains missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != values.shape[1]:
                raise DimensionMismatch("labels must name every column")
            object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def endog(self) -> np.ndarray:
        return self.values[:, : self.k]

    @property
    def exog(self) -> np.ndarray:
        return self.values[:, self.k :]

    def head(self, n: int) -> "SeriesMatrix":
        """First ``n`` rows (the information set at time ``n``)."""
        return SeriesMatrix(self.values[:n], self.k, self.m, self.labels)


@dataclass(frozen=True)
class PenaltyStructure:
    kind: str
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_structure(self.kind))
        if not 0.0 <= self.alpha <= 1.0:
            raise UsageError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise UsageError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ModelSpec:
    """Model configuration; field names mirror the config-file keys.

    ``alpha``/``gamma`` are candidate grids. ``None`` means the default
    (``1/(k+1)`` for alpha, ``0, 0.1, ..., 1`` for the Tapered gamma), which
    :meth:`resolve` fills in once the data dimensions are known.
    """

    p: int
    s: int = 0
    struct: str = "Basic"
    gran: tuple = (25.0, 10)
    own_lambdas: bool = False
    lambdas: Optional[tuple] = None
    h: int = 1
    recursive: bool = False
    mn: bool = False
    c: Optional[tuple] = None
    alpha: Optional[tuple] = None
    gamma: Optional[tuple] = None
    t1: Optional[int] = None
    t2: Optional[int] = None
    one_se: bool = False
    ic: bool = True
    rvar: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "struct", canonical_structure(self.struct))
        for name in ("lambdas", "c", "alpha", "gamma"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(x) for x in np.atleast_1d(val)))
        object.__setattr__(self, "gran", (float(self.gran[0]), int(self.gran[1])))
        if self.p < 0 or self.s < 0:
            raise UsageError("lag orders must be non-negative")
        if self.p < 1 and self.struct != "Basic":
            raise UsageError("p must be at least 1")
        if self.h < 1:
            raise UsageError("forecast horizon h must be >= 1")
        if self.gran[0] <= 1.0:
            raise UsageError("grid depth must exceed 1")
        if self.gran[1] < 1:
            raise UsageError("need at least one grid point")
        if self.rvar not in REFIT_MODES:
            raise UsageError(f"rvar must be one of {REFIT_MODES}")
        if self.own_lambdas:
            if not self.lambdas or any(x <= 0 for x in self.lambdas):
                raise UsageError("own_lambdas requires a non-empty list of positive lambdas")
        for a in self.alpha or ():
            if not 0.0 <= a <= 1.0:
                raise UsageError("every alpha must lie in [0, 1]")
        for g in self.gamma or ():
            if not 0.0 <= g <= 1.0:
                raise UsageError("every gamma must lie in [0, 1]")
        if self.c is not None and any(x != 0 for x in self.c) and not self.mn:
            raise UsageError("c may be nonzero only when mn is set")

    def resolve(self, data: SeriesMatrix) -> "ModelSpec":
        """Check this configuration against ``data`` and fill data-dependent defaults."""
        k, m, T = data.k, data.m, data.T
        if self.struct in VARX_ONLY:
            if m < 1 or self.s < 1:
                raise UnsupportedStructure(f"{self.struct} requires exogenous series")
            if self.s != self.p:
                raise UsageError("EFX requires s == p")
        if self.struct in VAR_ONLY and m > 0 and self.s > 0:
            raise UnsupportedStructure(f"{self.struct} supports VAR models only")
        if m == 0 and self.s > 0:
            raise UsageError("s > 0 requires exogenous columns")
        if self.recursive and m > 0 and self.s > 0:
            raise UsageError("recursive forecasts are available for VAR models only")
        t1 = T // 3 if self.t1 is None else self.t1
        t2 = (2 * T) // 3 if self.t2 is None else self.t2
        if not 1 <= t1 < t2 < T:
            raise UsageError(f"need 1 <= t1 < t2 < T (got t1={t1}, t2={t2}, T={T})")
        c = self.c if self.c is not None else (0.0,) * k
        if len(c) != k:
            raise DimensionMismatch(f"c has length {len(c)}, expected k={k}")
        if any(x not in (0.0, 1.0) for x in c):
            raise UsageError("c must be a 0/1 vector")
        alpha = self.alpha if self.alpha is not None else (1.0 / (k + 1),)
        gamma = self.gamma if self.gamma is not None else tuple(np.round(np.arange(11) / 10, 1))
        return replace(self, t1=t1, t2=t2, c=tuple(c), alpha=alpha, gamma=gamma)

    def penalty_variants(self) -> list:
        """Penalty structures searched jointly with lambda."""
        if self.struct in SPARSE_GROUP:
            return [PenaltyStructure(self.struct, alpha=a) for a in self.alpha]
        if self.struct == "Tapered":
            return [PenaltyStructure(self.struct, gamma=g) for g in self.gamma]
        return [PenaltyStructure(self.struct)]

    @property
    def direct(self) -> bool:
        """Multi-step forecasts come from a direct design unless recursion was asked for."""
        return self.h > 1 and not self.recursive


@dataclass(frozen=True)
class LagRegression:
    y: np.ndarray
    z: np.ndarray
    offset: int
    k: int
    m: int
    p: int
    s: int
    delta: int = 1

    @property
    def teff(self) -> int:
        return self.y.shape[1]

    @property
    def n_coef(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class CoefficientSet:
    """Estimated ``B = [nu | Phi | beta]`` plus the fit that produced it."""

    b: np.ndarray
    k: int
    m: int
    p: int
    s: int
    lam: float = 0.0
    alpha: float = 0.0
    gamma: float = 0.0
    struct: str = "Basic"
    converged: bool = True
    n_iter: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.shape != (self.k, self.k * self.p + self.m * self.s + 1):
            raise DimensionMismatch(
                f"coefficient matrix has shape {b.shape}, expected "
                f"({self.k}, {self.k * self.p + self.m * self.s + 1})"
            )
        if not np.all(np.isfinite(b)):
            raise NonFinite("coefficient matrix contains non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def nu(self) -> np.ndarray:
        return self.b[:, 0]

    @property
    def phi(self) -> np.ndarray:
        return self.b[:, 1 : 1 + self.k * self.p]

    @property
    def beta(self) -> np.ndarray:
        return self.b[:, 1 + self.k * self.p :]

    def phi_lag(self, lag: int) -> np.ndarray:
        start = 1 + (lag - 1) * self.k
        return self.b[:, start : start + self.k]

    @property
    def lags_needed(self) -> int:
        return max(self.p, self.s)

    def with_b(self, b, **changes) -> "CoefficientSet":
        return replace(self, b=b, **changes)


def lag_regression(values: np.ndarray, k: int, p: int, s: int = 0, delta: int = 1) -> LagRegression:
    """Build ``(Y, Z)`` from raw rows.

    ``delta`` is the gap between a target and its most recent predictor: 1 for
    one-step (and iterated) designs, ``h`` for direct ``h``-step designs.
    ``p = 0`` gives an intercept-only endogenous part.
    """
    values = np.asarray(values, dtype=float)
    T = values.shape[0]
    m = values.shape[1] - k
    if not np.all(np.isfinite(values)):
        raise NonFinite("data contains missing or non-finite values")
    offset = max(p, s) + delta - 1 if max(p, s) > 0 else 0
    if T <= offset:
        raise InsufficientData(
            f"need more than {offset} observations for p={p}, s={s}, delta={delta}; got {T}"
        )
    teff = T - offset
    y = values[offset:, :k].T
    blocks = [np.ones((1, teff))]
    for lag in range(1, p + 1):
        lo = offset - delta - lag + 1
        blocks.append(values[lo : lo + teff, :k].T)
    for lag in range(1, s + 1):
        lo = offset - delta - lag + 1
        blocks.append(values[lo : lo + teff, k:].T)
    z = np.vstack(blocks)
    return LagRegression(
        y=np.ascontiguousarray(y), z=np.ascontiguousarray(z), offset=offset,
        k=k, m=m, p=p, s=s, delta=delta,
    )


def build_lag_regression(data: SeriesMatrix, spec: ModelSpec, horizon_mode: str = "onestep") -> LagRegression:
    """Lag regression for ``spec``; ``horizon_mode`` is ``"onestep"`` or ``"direct"``."""
    if horizon_mode not in ("onestep", "iterated", "direct"):
        raise UsageError(f"unknown horizon mode {horizon_mode!r}")
    delta = spec.h if horizon_mode == "direct" else 1
    s = spec.s if data.m > 0 else 0
    return lag_regression(data.values, data.k, spec.p, s, delta)


def predictor_vector(values: np.ndarray, k: int, p: int, s: int) -> np.ndarray:
    """Design column built from the last rows of ``values`` (the newest row last)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < max(p, s):
        raise InsufficientData(f"need at least {max(p, s)} rows of history, got {n}")
    parts = [np.ones(1)]
    parts += [values[n - lag, :k] for lag in range(1, p + 1)]
    parts += [values[n - lag, k:] for lag in range(1, s + 1)]
    return np.concatenate(parts)


@dataclass(frozen=True)
class Scaling:
    mean: np.ndarray
    sd: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.sd

    def invert(self, values: np.ndarray, columns: Optional[Sequence[int]] = None) -> np.ndarray:
        """Map standardized values back to raw units (optionally a column subset)."""
        cols = slice(None) if columns is None else list(columns)
        return np.asarray(values, dtype=float) * self.sd[cols] + self.mean[cols]


def standardize(data: SeriesMatrix) -> tuple[SeriesMatrix, Scaling]:
    """Zero mean, unit (population, ``1/T``) variance per column."""
    mean = data.values.mean(axis=0)
    sd = data.values.std(axis=0)
    for j, v in enumerate(sd):
        if not v > 0.0:
            raise ZeroVariance(j)
    scaling = Scaling(mean, sd)
    return SeriesMatrix(scaling.apply(data.values), data.k, data.m, data.labels), scaling


def unstandardize(data: SeriesMatrix, scaling: Scaling) -> SeriesMatrix:
    return SeriesMatrix(scaling.invert(data.values), data.k, data.m, data.labels)


def minnesota_shift(obj, c, direction: str = "forward"):
    """Shift toward a (partial) vector random walk.

    ``forward`` takes a :class:`LagRegression` and subtracts ``c_i`` times the
    most recent own lag from response row ``i``, so that shrinking toward zero
    shrinks ``Phi(1)`` toward ``diag(c)``. ``inverse`` takes the fitted
    :class:`CoefficientSet` and adds ``c_i`` back to ``Phi(1)[i, i]``.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or len(c) != obj.k:
        raise DimensionMismatch(f"c must have length k={obj.k}")
    if obj.p < 1:
        raise DimensionMismatch("Minnesota shift needs p >= 1")
    rows = np.arange(obj.k)
    if direction == "forward":
        y = obj.y - c[:, None] * obj.z[1 : 1 + obj.k]
        return replace(obj, y=y)
    if direction == "inverse":
        b = np.array(obj.b)
        b[rows, 1 + rows] += c
        return obj.with_b(b)
    raise UsageError(f"direction must be 'forward' or 'inverse', not {direction!r}")
