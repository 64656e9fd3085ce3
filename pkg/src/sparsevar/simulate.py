"""VAR simulation, companion form and the sparse scenario generators.

Random numbers come from NumPy's PCG64 bit generator, read as raw 64-bit
outputs so the stream is fixed by the generator algorithm alone:

* ``u = ((raw >> 11) + 0.5) * 2**-53`` maps each output into ``(0, 1)``;
* consecutive uniforms ``(u1, u2)`` become two standard normals by
  Box-Muller, ``sqrt(-2 log u1) * (cos 2 pi u2, sin 2 pi u2)``.

Innovations are ``C z`` with ``C`` the lower Cholesky factor of the
innovation covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SeriesMatrix
from .exceptions import DimensionMismatch, EigenFailure, NotSPD, NotStationary


@dataclass(frozen=True)
class CompanionMatrix:
    a: np.ndarray
    k: int
    p: int


def to_companion(phi, p: int) -> CompanionMatrix:
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    k = phi.shape[0]
    if p < 1 or phi.shape[1] != k * p:
        raise DimensionMismatch(f"phi must be k x kp with p={p}; got shape {phi.shape}")
    a = np.zeros((k * p, k * p))
    a[:k] = phi
    a[k:, : k * (p - 1)] = np.eye(k * (p - 1))
    return CompanionMatrix(a, k, p)


def spectral_radius(a) -> float:
    a = a.a if isinstance(a, CompanionMatrix) else np.asarray(a, dtype=float)
    try:
        eig = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return float(np.max(np.abs(eig))) if eig.size else 0.0


def is_stationary(a, tol: float = 1e-10) -> tuple[bool, float]:
    radius = spectral_radius(a)
    return radius < 1.0 - tol, radius


def standard_normals(seed: int, n: int) -> np.ndarray:
    """``n`` standard normal draws from the documented PCG64 + Box-Muller stream."""
    bitgen = np.random.PCG64(seed)
    pairs = (n + 1) // 2
    raw = bitgen.random_raw(2 * pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def innovation_factor(sigma_u) -> np.ndarray:
    sigma_u = np.atleast_2d(np.asarray(sigma_u, dtype=float))
    if sigma_u.shape[0] != sigma_u.shape[1]:
        raise DimensionMismatch("covariance must be square")
    if not np.allclose(sigma_u, sigma_u.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(sigma_u).max())):
        raise NotSPD("covariance is not symmetric")
    try:
        return np.linalg.cholesky(sigma_u)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("covariance is not positive definite") from exc


def simulate_var(phi, sigma_u, t_out: int, burn_in: int = 500, seed: int = 0,
                 nu=None) -> SeriesMatrix:
    """``t_out`` observations of ``y_t = nu + sum_l Phi(l) y_{t-l} + u_t`` from a zero start."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    k = phi.shape[0]
    if phi.shape[1] % k:
        raise DimensionMismatch("phi must be k x kp")
    p = phi.shape[1] // k
    chol = innovation_factor(sigma_u)
    if chol.shape[0] != k:
        raise DimensionMismatch("covariance and coefficients disagree on k")
    if p > 0:
        ok, radius = is_stationary(to_companion(phi, p))
        if not ok:
            raise NotStationary(f"companion spectral radius {radius:.6g} >= 1")
    nu = np.zeros(k) if nu is None else np.asarray(nu, dtype=float)
    n = burn_in + t_out
    shocks = standard_normals(seed, n * k).reshape(n, k) @ chol.T
    y = np.zeros((n + p, k))
    blocks = [phi[:, (l - 1) * k : l * k] for l in range(1, p + 1)]
    for t in range(n):
        row = nu + shocks[t]
        for l, block in enumerate(blocks, start=1):
            row = row + block @ y[p + t - l]
        y[p + t] = row
    return SeriesMatrix(y[p + burn_in :], k)


def _scale_to_radius(phi: np.ndarray, p: int, target: float) -> np.ndarray:
    # radius of the companion of (c * Phi(l)) is not linear in c; bisect on c
    lo, hi = 0.0, 1.0
    while spectral_radius(to_companion(phi * hi, p)) < target:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if spectral_radius(to_companion(phi * mid, p)) < target:
            lo = mid
        else:
            hi = mid
    return phi * lo


def sparse_var_coefficients(k: int = 8, p: int = 4, density: float = 0.15,
                            radius: float = 0.9, seed: int = 2024) -> np.ndarray:
    """Seeded sparse ``k x kp`` coefficient matrix with companion radius ``radius``.

    The diagonal of ``Phi(1)`` is always active so every series is persistent.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    phi = np.zeros((k, k * p))
    mask = rng.random((k, k * p)) < density
    mask[np.arange(k), np.arange(k)] = True
    signs = rng.choice([-1.0, 1.0], size=(k, k * p))
    mags = rng.uniform(0.3, 1.0, size=(k, k * p))
    phi[mask] = (signs * mags)[mask]
    return _scale_to_radius(phi, p, radius)


def clique_covariance(k: int = 8, rho: float = 0.7, var: float = 0.1) -> np.ndarray:
    """Two equicorrelated cliques of sizes ``k//2`` and ``k - k//2``; zero across them."""
    sigma = np.zeros((k, k))
    for block in (slice(0, k // 2), slice(k // 2, k)):
        n = block.stop - block.start
        sigma[block, block] = var * ((1 - rho) * np.eye(n) + rho * np.ones((n, n)))
    return sigma


def ill_conditioned_covariance(k: int = 8, cond: float = 5e7, scale: float = 0.1,
                               seed: int = 7) -> np.ndarray:
    """SPD matrix with eigenvalues assigned log-uniformly from ``scale`` down to ``scale/cond``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    q = q * np.sign(np.diag(r))
    eig = scale * np.logspace(0.0, -np.log10(cond), k)
    sigma = (q * eig) @ q.T
    return 0.5 * (sigma + sigma.T)


def dense_covariance(k: int = 8, scale: float = 0.1, seed: int = 11) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.standard_normal((k, k))
    sigma = a @ a.T / k + np.eye(k)
    d = np.sqrt(np.diag(sigma))
    return scale * sigma / np.outer(d, d)


def scenario_generators(k: int = 8, p: int = 4) -> dict:
    """Seeded sparse VAR(p) coefficients and four innovation covariances.

    Keys: ``phi``, ``hub`` (two cliques), ``ill_conditioned``,
    ``scaled_identity`` and ``dense``. Each defining property is asserted.
    """
    phi = sparse_var_coefficients(k, p)
    hub = clique_covariance(k)
    ill = ill_conditioned_covariance(k)
    ident = 0.1 * np.eye(k)
    dense = dense_covariance(k)
    if not is_stationary(to_companion(phi, p))[0]:
        raise NotStationary("scenario coefficients are not stationary")
    outside = np.ones((k, k), dtype=bool)
    outside[: k // 2, : k // 2] = False
    outside[k // 2 :, k // 2 :] = False
    checks = {
        "hub covariance leaks outside its cliques": np.all(hub[outside] == 0.0),
        "ill-conditioned covariance is too well conditioned": np.linalg.cond(ill) >= 1e7,
        "scaled identity is not scalar": np.linalg.cond(ident) == 1.0,
        "dense covariance is sparse or badly conditioned":
            np.linalg.cond(dense) < 100.0 and np.all(np.abs(dense) > 0),
    }
    for message, ok in checks.items():
        if not ok:
            raise NotSPD(message)
    for sigma in (hub, ill, ident, dense):
        innovation_factor(sigma)
    return {"phi": phi, "p": p, "hub": hub, "ill_conditioned": ill,
            "scaled_identity": ident, "dense": dense}


GENERATOR_VAR3_3 = np.array([
    [-0.29, 0.00, 0.0, -0.62, 0.00, 0.00, -0.49, 0.00, 0.00],
    [-0.26, -0.20, 0.0, -0.77, -0.36, 0.00, -1.24, -0.07, 0.00],
    [-0.66, 0.75, 1.3, 0.30, -0.40, -0.44, 0.36, 0.05, 0.03],
])
