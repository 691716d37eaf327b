"""Numeric building blocks: SVD, seeded Gaussians, Marchenko-Pastur integrals, shrinkage.

Marchenko-Pastur quantities refer to singular values of ``G / sqrt(n2)`` for an
``n1 x n2`` standard Gaussian ``G`` with aspect ratio ``s = n1 / n2 <= 1``.
The integrals are delegated to the kernel backend chosen in ``_backend``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from artifact import _backend
from artifact.errors import NumericFailure

QUAD_TOL = 1e-9


class SvdTriple(NamedTuple):
    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class MpParams:
    """Aspect ratio of the Marchenko-Pastur law and its support edges."""

    s: float
    lb: float = field(init=False)
    ub: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"aspect ratio must lie in (0, 1], got {self.s}")
        root = math.sqrt(self.s)
        object.__setattr__(self, "lb", 1.0 - root)
        object.__setattr__(self, "ub", 1.0 + root)

    @classmethod
    def for_shape(cls, n1: int, n2: int) -> "MpParams":
        lo, hi = sorted((n1, n2))
        return cls(lo / hi)


def svd(m: np.ndarray) -> SvdTriple:
    """Thin SVD with singular values sorted non-increasingly."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NumericFailure("SVD input has non-finite entries")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return SvdTriple(u, s, vt.T)


def rng_for(seed: int | tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(seed)


def gaussian_matrix(rows: int, cols: int, seed: int | tuple[int, ...]) -> np.ndarray:
    """Matrix of i.i.d. N(0, 1) entries, fully determined by ``seed``."""
    if rows < 0 or cols < 0:
        raise ValueError("dimensions must be non-negative")
    return rng_for(seed).standard_normal((rows, cols))


def mp_density(u: float, p: MpParams) -> float:
    return _backend.kernels.mp_density(float(u), p.s)


def mp_cdf(x: float, p: MpParams) -> float:
    return _backend.kernels.mp_cdf(float(x), p.s, QUAD_TOL)


def phi(tau: float, p: MpParams) -> float:
    """Integral of ``(u - tau)_+^2`` against the Marchenko-Pastur density."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return _backend.kernels.phi(float(tau), p.s, QUAD_TOL)


def phi_many(taus: np.ndarray, p: MpParams) -> np.ndarray:
    taus = np.asarray(taus, dtype=float)
    if taus.size and taus.min() < 0:
        raise ValueError("tau must be non-negative")
    return _backend.kernels.phi_many(taus, p.s, QUAD_TOL)


def varphi(alpha: float) -> float:
    """Closed form of ``phi(alpha, s=1)``, extended quadratically for alpha < 0."""
    return _backend.kernels.varphi(float(alpha))


def shrinkage_sq(g: float, a: float) -> float:
    """``min over |z| <= a of (g - z)^2``, i.e. ``(|g| - a)_+^2``."""
    if a < 0:
        raise ValueError("radius must be non-negative")
    return _backend.kernels.shrinkage_sq(float(g), float(a))


def _check_thresholds(n1: int, n2: int, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if n1 < 1 or n1 > n2:
        raise ValueError("need 1 <= n1 <= n2")
    if f.shape != (n1,):
        raise ValueError(f"expected {n1} thresholds, got shape {f.shape}")
    if np.any(f < 0) or np.any(np.diff(f) > 0):
        raise ValueError("thresholds must be non-negative and non-increasing")
    return f


def expected_shrinkage_mc(
    n1: int,
    n2: int,
    f: np.ndarray,
    trials: int,
    seed: int,
    return_stderr: bool = False,
) -> float | tuple[float, float]:
    """Monte-Carlo mean of ``(1/n1) sum_i (sigma_i(G/sqrt(n2)) - f_i)_+^2``.

    Trial ``k`` draws its Gaussian from seed ``seed + k``.
    """
    f = _check_thresholds(n1, n2, f)
    if trials < 1:
        raise ValueError("trials must be positive")
    vals = np.empty(trials)
    scale = 1.0 / math.sqrt(n2)
    for k in range(trials):
        sv = np.linalg.svd(gaussian_matrix(n1, n2, seed + k) * scale, compute_uv=False)
        vals[k] = np.mean(np.maximum(sv - f, 0.0) ** 2)
    mean = float(vals.mean())
    if not return_stderr:
        return mean
    err = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return mean, err


def expected_shrinkage_mp(n1: int, n2: int, f: np.ndarray) -> float:
    """Marchenko-Pastur approximation ``(1/n1) sum_i phi(f_i, n1/n2)``."""
    f = _check_thresholds(n1, n2, f)
    return float(np.mean(phi_many(f, MpParams(n1 / n2))))


def table_thresholds(n1: int, n2: int, gamma: float, seed: int) -> np.ndarray:
    """Random thresholds ``gamma * sigma(C)`` with ``C ~ N(0, 1/n2)`` of size n1 x n2."""
    c = gaussian_matrix(n1, n2, seed) / math.sqrt(n2)
    return gamma * np.linalg.svd(c, compute_uv=False)


def mp_ks_distance(n1: int, n2: int, seed: int) -> float:
    """Kolmogorov-Smirnov distance between sigma(G/sqrt(n2)) and the MP law."""
    p = MpParams.for_shape(n1, n2)
    sv = np.sort(np.linalg.svd(gaussian_matrix(n1, n2, seed) / math.sqrt(max(n1, n2)), compute_uv=False))
    cdf = np.array([mp_cdf(x, p) for x in sv])
    k = np.arange(1, sv.size + 1)
    return float(max(np.max(k / sv.size - cdf), np.max(cdf - (k - 1) / sv.size)))
