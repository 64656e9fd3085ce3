"""Group partitions, penalty values and proximal operators.

Every structure acts on the penalized block ``W = B[:, 1:]`` (the intercept
is never penalized). A partition is a list of index groups into ``W``
(row-major flat indices), a weight per group and optional per-coefficient L1
weights. The penalty is

    P(W) = mix_group * sum_g w_g ||W_g||_2 + mix_l1 * sum_ij l1_ij |W_ij|

with ``mix_group = 1 - alpha`` and ``mix_l1 = alpha`` for the sparse-group
structures. Nested structures list their groups innermost first, so one
sequential sweep of block soft-thresholding is the exact prox.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import SPARSE_GROUP, VAR_ONLY, VARX_ONLY, CoefficientSet, PenaltyStructure
from .exceptions import DimensionMismatch, UnsupportedStructure

NESTED = ("EFX", "HVARC", "HVAROO", "HVARELEM")


@dataclass(frozen=True)
class GroupPartition:
    kind: str
    k: int
    m: int
    p: int
    s: int
    groups: tuple
    weights: np.ndarray
    l1_weights: Optional[np.ndarray]
    nested: bool
    roots: np.ndarray
    rect: tuple
    alpha: float = 0.0
    gamma: float = 0.0

    @property
    def shape(self) -> tuple:
        return (self.k, self.k * self.p + self.m * self.s)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def mixing(self, alpha: Optional[float] = None) -> tuple[float, float]:
        """``(group multiplier, L1 multiplier)`` for this structure."""
        a = self.alpha if alpha is None else alpha
        if self.kind in SPARSE_GROUP:
            return 1.0 - a, a
        return (1.0 if self.groups else 0.0), (1.0 if self.l1_weights is not None else 0.0)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Groups packed as ``(idx, ptr)`` arrays for the sweep kernel."""
        cached = self.__dict__.get("_csr")
        if cached is None:
            sizes = [len(g) for g in self.groups]
            ptr = np.zeros(len(sizes) + 1, dtype=np.int64)
            np.cumsum(sizes, out=ptr[1:])
            idx = (np.concatenate(self.groups) if self.groups else np.zeros(0)).astype(np.int64)
            cached = (idx, ptr)
            object.__setattr__(self, "_csr", cached)
        return cached


def _check_applicable(kind: str, k: int, m: int, p: int, s: int) -> None:
    varx = m > 0 and s > 0
    if kind in VARX_ONLY and not varx:
        raise UnsupportedStructure(f"{kind} is available for VARX models only")
    if kind in VAR_ONLY and varx:
        raise UnsupportedStructure(f"{kind} is available for VAR models only")
    if kind == "EFX" and s != p:
        raise UnsupportedStructure("EFX needs s == p")


def build_partition(penalty: PenaltyStructure, k: int, m: int = 0, p: int = 1, s: int = 0) -> GroupPartition:
    """Exact grouping of ``[Phi, beta]`` for ``penalty`` at dimensions ``(k, m, p, s)``."""
    kind = penalty.kind
    if m == 0:
        s = 0
    _check_applicable(kind, k, m, p, s)
    ncols = k * p + m * s

    def endo(lag, series):
        return (lag - 1) * k + series

    def exo(lag, series):
        return k * p + (lag - 1) * m + series

    groups, weights, roots, rect = [], [], [], []

    def add(rows, cols, weight, root, is_rect=False):
        idx = np.asarray([r * ncols + c for r, c in zip(rows, cols)], dtype=np.int64)
        if idx.size == 0:
            return
        groups.append(idx)
        weights.append(weight)
        roots.append(root)
        if is_rect:
            rect.append((np.unique(rows), np.unique(cols)))
        else:
            rect.append(None)

    def add_block(row_set, col_set, weight):
        rows = [r for r in row_set for _ in col_set]
        cols = [c for _ in row_set for c in col_set]
        add(rows, cols, weight, True, is_rect=True)

    all_rows = range(k)
    l1 = None
    if kind in ("Lag", "SparseLag"):
        for lag in range(1, p + 1):
            add_block(all_rows, [endo(lag, j) for j in range(k)], np.sqrt(k * k))
    if kind in ("OwnOther", "SparseOO"):
        for lag in range(1, p + 1):
            add(list(all_rows), [endo(lag, i) for i in all_rows], np.sqrt(k), True)
            off = [(i, endo(lag, j)) for i in all_rows for j in range(k) if j != i]
            add([r for r, _ in off], [c for _, c in off], np.sqrt(k * (k - 1)), True)
    if kind in ("Lag", "SparseLag", "OwnOther", "SparseOO"):
        for lag in range(1, s + 1):
            for i in range(m):
                add_block(all_rows, [exo(lag, i)], np.sqrt(k))
    if kind in SPARSE_GROUP or kind == "Basic":
        l1 = np.ones((k, ncols))
    if kind == "Tapered":
        l1 = np.ones((k, ncols))
        for lag in range(1, p + 1):
            l1[:, (lag - 1) * k : lag * k] = float(lag) ** penalty.gamma
    if kind == "EFX":
        for lag in range(1, p + 1):
            for j in range(k):
                inner = [exo(lag, i) for i in range(m)]
                add([j] * m, inner, 1.0, False)
                outer = [endo(lag, c) for c in range(k)] + inner
                add([j] * len(outer), outer, 1.0, True)
    if kind == "HVARC":
        for i in range(k):
            for lag in range(p, 0, -1):
                cols = [endo(l, j) for l in range(lag, p + 1) for j in range(k)]
                add([i] * len(cols), cols, 1.0, lag == 1)
    if kind == "HVAROO":
        for i in range(k):
            for lag in range(p, 0, -1):
                tail = [endo(l, j) for l in range(lag + 1, p + 1) for j in range(k)]
                other = [endo(lag, j) for j in range(k) if j != i] + tail
                add([i] * len(other), other, 1.0, False)
                full = [endo(l, j) for l in range(lag, p + 1) for j in range(k)]
                add([i] * len(full), full, 1.0, lag == 1)
    if kind == "HVARELEM":
        for i in range(k):
            for j in range(k):
                for lag in range(p, 0, -1):
                    cols = [endo(l, j) for l in range(lag, p + 1)]
                    add([i] * len(cols), cols, 1.0, lag == 1)

    return GroupPartition(
        kind=kind, k=k, m=m, p=p, s=s,
        groups=tuple(groups),
        weights=np.asarray(weights, dtype=float),
        l1_weights=l1,
        nested=kind in NESTED,
        roots=np.asarray(roots, dtype=bool),
        rect=tuple(rect),
        alpha=penalty.alpha,
        gamma=penalty.gamma,
    )


def _as_w(b, partition: GroupPartition) -> np.ndarray:
    if isinstance(b, CoefficientSet):
        w = b.b[:, 1:]
    else:
        w = np.asarray(b, dtype=float)
        if w.shape == (partition.k, partition.shape[1] + 1):
            w = w[:, 1:]
    if w.shape != partition.shape:
        raise DimensionMismatch(f"coefficients have shape {w.shape}, expected {partition.shape}")
    return w


def penalty_value(b, partition: GroupPartition, lam: float, alpha: Optional[float] = None) -> float:
    """``lam * P(W)`` for a coefficient set, a full ``B`` or a penalized block ``W``."""
    w = _as_w(b, partition)
    mix_g, mix_l1 = partition.mixing(alpha)
    total = 0.0
    if mix_g and partition.groups:
        total += mix_g * float(group_norms(w, partition) @ partition.weights)
    if mix_l1 and partition.l1_weights is not None:
        total += mix_l1 * float(np.sum(partition.l1_weights * np.abs(w)))
    return lam * total


def group_norms(w, partition: GroupPartition) -> np.ndarray:
    """Euclidean norm of every group of ``w`` (any shape with ``k*ncols`` entries)."""
    idx, ptr = partition.csr()
    if len(ptr) == 1:
        return np.zeros(0)
    sq = np.asarray(w, dtype=float).reshape(-1)[idx] ** 2
    return np.sqrt(np.add.reduceat(sq, ptr[:-1]))


def soft_threshold(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def prox(v, partition: GroupPartition, tau: float, alpha: Optional[float] = None) -> np.ndarray:
    """``argmin_u 0.5 ||u - v||^2 + tau * P(u)``; same shape as ``v``."""
    v = np.asarray(v, dtype=float)
    shape = v.shape
    u = np.array(v.reshape(-1), dtype=float)
    if tau == 0.0:
        return u.reshape(shape)
    mix_g, mix_l1 = partition.mixing(alpha)
    if mix_l1 and partition.l1_weights is not None:
        u = soft_threshold(u, tau * mix_l1 * partition.l1_weights.ravel())
    if mix_g and partition.groups:
        idx, ptr = partition.csr()
        _kernels.group_sweep(u, idx, ptr, tau * mix_g * partition.weights)
    return u.reshape(shape)
