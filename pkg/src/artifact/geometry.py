"""Subspace priors with prescribed principal angles and their adapted bases.

Angles are given in degrees and stored non-increasingly. Wherever a
diagonal matrix of angles pairs with basis columns, the columns follow the
reversed (ascending) order, so column ``i`` of ``U`` is matched with the
``i``-th smallest angle. Every routine uses this single convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from artifact.errors import DegenerateAngle, InvalidInstance
from artifact.numerics import rng_for

ANGLE_FLOOR = 1e-4
ORTHO_TOL = 1e-8


def _angle_tuple(values: Sequence[float], r: int, name: str) -> tuple[float, ...]:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.shape != (r,):
        raise InvalidInstance(f"{name} needs {r} angles, got {arr.size}")
    if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 90.0:
        raise InvalidInstance(f"{name} angles must lie in [0, 90] degrees")
    return tuple(float(a) for a in np.sort(arr)[::-1])


@dataclass(frozen=True)
class SubspacePrior:
    """Dimensions ``(n, r, r')`` plus principal angles between the true and prior subspaces."""

    n: int
    r: int
    r_prime: int
    theta_u: tuple[float, ...] = field(default=())
    theta_v: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        n, r, rp = self.n, self.r, self.r_prime
        if not (1 <= r <= rp and r + rp <= n):
            raise InvalidInstance(f"need 1 <= r <= r' and r + r' <= n, got n={n}, r={r}, r'={rp}")
        object.__setattr__(self, "theta_u", _angle_tuple(self.theta_u, r, "theta_u"))
        object.__setattr__(self, "theta_v", _angle_tuple(self.theta_v, r, "theta_v"))

    def columns_u(self) -> np.ndarray:
        """Angles of ``theta_u`` in radians, in basis-column (ascending) order."""
        return np.radians(self.theta_u[::-1])

    def columns_v(self) -> np.ndarray:
        return np.radians(self.theta_v[::-1])

    def clamped(self) -> tuple["SubspacePrior", bool]:
        """Copy with angles moved into ``[floor, 90 - floor]``; flag tells whether anything moved."""
        lo, hi = ANGLE_FLOOR, 90.0 - ANGLE_FLOOR
        tu = np.clip(self.theta_u, lo, hi)
        tv = np.clip(self.theta_v, lo, hi)
        changed = bool(np.any(tu != self.theta_u) or np.any(tv != self.theta_v))
        return SubspacePrior(self.n, self.r, self.r_prime, tuple(tu), tuple(tv)), changed


@dataclass(frozen=True)
class GroundTruth:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        for name, m in (("U", self.U), ("V", self.V)):
            if not np.allclose(m.T @ m, np.eye(m.shape[1]), atol=1e-10):
                raise InvalidInstance(f"{name} must have orthonormal columns")
        if np.any(np.asarray(self.sigma) <= 0):
            raise InvalidInstance("singular values must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


class PriorInstance(NamedTuple):
    truth: GroundTruth
    Utilde: np.ndarray
    Vtilde: np.ndarray


@dataclass(frozen=True)
class BasisPair:
    """Orthonormal bases ``B_L = [U, U'_1, U'_2, U'']`` and ``B_R`` likewise for V."""

    B_L: np.ndarray
    B_R: np.ndarray
    widths: tuple[int, int, int, int]


def _tilted_side(q: np.ndarray, angles: np.ndarray, r: int, rp: int) -> tuple[np.ndarray, np.ndarray]:
    base = q[:, :r]
    away = q[:, r : 2 * r]
    extra = q[:, 2 * r : r + rp]
    tilde = np.hstack([base * np.cos(angles) + away * np.sin(angles), extra])
    return base, tilde


def make_prior_instance(p: SubspacePrior, seed: int | tuple[int, ...]) -> PriorInstance:
    """Random ``X = U diag(sigma) V^T`` with priors satisfying ``U^T Utilde = [cos(theta_u), 0]``."""
    rng = rng_for(seed)
    qu, _ = np.linalg.qr(rng.standard_normal((p.n, p.n)))
    qv, _ = np.linalg.qr(rng.standard_normal((p.n, p.n)))
    sigma = np.sort(np.abs(rng.standard_normal(p.r)) + 0.5)[::-1]
    U, ut = _tilted_side(qu, p.columns_u(), p.r, p.r_prime)
    V, vt = _tilted_side(qv, p.columns_v(), p.r, p.r_prime)
    return PriorInstance(GroundTruth(U, sigma, V), ut, vt)


def _check_orthonormal(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or not np.allclose(m.T @ m, np.eye(m.shape[1]), atol=ORTHO_TOL):
        raise InvalidInstance(f"{name} must have orthonormal columns")


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles in degrees between span(a) and span(b), sorted non-increasingly."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_orthonormal(a, "first basis")
    _check_orthonormal(b, "second basis")
    if a.shape[1] > b.shape[1]:
        raise InvalidInstance("first basis must not be wider than the second")
    cosines = np.clip(np.linalg.svd(a.T @ b, compute_uv=False), 0.0, 1.0)
    return np.sort(np.degrees(np.arccos(cosines)))[::-1]


def _adapted_basis(base: np.ndarray, tilde: np.ndarray, angles: np.ndarray, r: int, name: str) -> np.ndarray:
    n = base.shape[0]
    cross = base.T @ tilde
    expect = np.zeros_like(cross)
    expect[:, :r] = np.diag(np.cos(angles))
    if not np.allclose(cross, expect, atol=1e-8):
        raise InvalidInstance(f"{name} prior is not aligned with the stated principal angles")
    if np.degrees(angles).min() < ANGLE_FLOOR:
        raise DegenerateAngle(f"{name} has a principal angle below {ANGLE_FLOOR} degrees")
    off = tilde - base @ cross
    first = -off[:, :r] / np.sin(angles)
    second = -off[:, r:]
    known = np.hstack([base, first, second])
    q, _ = np.linalg.qr(known, mode="complete")
    return np.hstack([known, q[:, known.shape[1] : n]])


def build_basis_pair(gt: GroundTruth, Utilde: np.ndarray, Vtilde: np.ndarray, p: SubspacePrior) -> BasisPair:
    """Adapted bases in which both priors and X take the block forms used by the weighted analysis."""
    if gt.U.shape != (p.n, p.r) or Utilde.shape != (p.n, p.r_prime) or Vtilde.shape != (p.n, p.r_prime):
        raise InvalidInstance("basis shapes do not match the prior dimensions")
    B_L = _adapted_basis(gt.U, Utilde, p.columns_u(), p.r, "column")
    B_R = _adapted_basis(gt.V, Vtilde, p.columns_v(), p.r, "row")
    widths = (p.r, p.r, p.r_prime - p.r, p.n - p.r - p.r_prime)
    return BasisPair(B_L, B_R, widths)
