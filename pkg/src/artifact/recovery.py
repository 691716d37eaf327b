"""Gaussian measurements and equality-constrained (weighted) nuclear-norm recovery.

Matrices are vectorized by stacking columns (``order="F"``). The weighted program
``min ||h_w(Z)||_* s.t. A vec(Z) = y`` is solved in the variable ``W = h_w(Z)``
by ADMM: singular-value soft-thresholding alternates with an exact projection
onto ``{W : A_w vec(W) = y}``, where ``A_w = A o h_w^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from artifact.errors import NumericFailure, UndefinedError
from artifact.numerics import gaussian_matrix
from artifact.weighting import WeightVector, apply_h_inverse


def vec(x: np.ndarray) -> np.ndarray:
    return np.reshape(x, x.shape[:-2] + (-1,), order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.reshape(v, v.shape[:-1] + (n, n), order="F")


@dataclass(frozen=True)
class MeasurementEnsemble:
    """``m`` linear measurements ``y = A vec(X)``; rows of ``A`` are vectorized sensing matrices."""

    A: np.ndarray
    y: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.A.shape[1])))

    @classmethod
    def from_operator(cls, A: np.ndarray, X: np.ndarray) -> "MeasurementEnsemble":
        A = np.asarray(A, dtype=float)
        return cls(A, A @ vec(X))


def measure(X: np.ndarray, m: int, seed: int) -> MeasurementEnsemble:
    """Draw ``m`` i.i.d. standard Gaussian measurements of a square matrix."""
    if m < 1:
        raise ValueError("m must be at least 1")
    n = X.shape[0]
    return MeasurementEnsemble.from_operator(gaussian_matrix(m, n * n, seed), X)


@dataclass(frozen=True)
class SolverParams:
    rho: float = 1.0
    max_iter: int = 2000
    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    success_threshold: float = 1e-2

    def __post_init__(self) -> None:
        if min(self.rho, self.primal_tol, self.dual_tol, self.success_threshold) <= 0 or self.max_iter < 1:
            raise ValueError("solver parameters must be positive")


class Diagnostics(NamedTuple):
    converged: bool
    iterations: int
    primal_residual: float
    dual_residual: float
    feasibility: float
    objective: tuple[float, ...]


def _svt(w: np.ndarray, tau: float) -> np.ndarray:
    u, s, vt = np.linalg.svd(w)
    return (u * np.maximum(s - tau, 0.0)) @ vt


def _solve_lifted(a_w: np.ndarray, y: np.ndarray, n: int, params: SolverParams) -> tuple[np.ndarray, Diagnostics]:
    """ADMM for ``min ||W||_* s.t. a_w vec(W) = y``; returns the feasible iterate.

    The problem is solved for ``y`` rescaled so that the least-norm solution has unit
    norm, which makes the fixed threshold ``1 / rho`` meaningful at any scale.
    ``objective`` records the nuclear norm of each feasible iterate.
    """
    try:
        pinv = np.linalg.pinv(a_w)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("pseudo-inverse failed") from exc
    base = pinv @ y
    scale = float(np.linalg.norm(base))
    if scale == 0.0:
        return np.zeros((n, n)), Diagnostics(True, 0, 0.0, 0.0, 0.0, (0.0,))
    base /= scale
    y_scaled = y / scale
    gram = pinv @ a_w

    def project(w: np.ndarray) -> np.ndarray:
        v = vec(w)
        return unvec(v - gram @ v + base, n)

    tau = 1.0 / params.rho
    feasible = unvec(base, n)
    dual = np.zeros((n, n))
    history: list[float] = []
    primal = dual_res = np.inf
    k = 0
    for k in range(1, params.max_iter + 1):
        low_rank = _svt(feasible - dual, tau)
        previous = feasible
        feasible = project(low_rank + dual)
        dual = dual + low_rank - feasible
        history.append(float(np.linalg.svd(feasible, compute_uv=False).sum()))
        primal = float(np.linalg.norm(low_rank - feasible))
        dual_res = params.rho * float(np.linalg.norm(feasible - previous))
        if primal <= params.primal_tol and dual_res <= params.dual_tol:
            break
    converged = primal <= params.primal_tol and dual_res <= params.dual_tol
    norm_y = max(float(np.linalg.norm(y_scaled)), 1e-300)
    feas = float(np.linalg.norm(a_w @ vec(feasible) - y_scaled)) / norm_y
    return feasible * scale, Diagnostics(converged, k, primal, dual_res, feas, tuple(h * scale for h in history))


def lifted_operator(e: MeasurementEnsemble, w: WeightVector, Utilde: np.ndarray, Vtilde: np.ndarray) -> np.ndarray:
    """Rows ``vec(h_w^{-1}(A_j))``, so that ``A vec(h_w^{-1}(W)) = lifted vec(W)``."""
    n = e.n
    return vec(apply_h_inverse(w, Utilde, Vtilde, unvec(e.A, n)))


def solve_weighted_nuclear(
    e: MeasurementEnsemble,
    w: WeightVector,
    Utilde: np.ndarray,
    Vtilde: np.ndarray,
    params: SolverParams = SolverParams(),
) -> tuple[np.ndarray, Diagnostics]:
    """Minimize ``||h_w(Z)||_*`` subject to ``A vec(Z) = y``."""
    n = e.n
    a_w = lifted_operator(e, w, Utilde, Vtilde)
    w_hat, diag = _solve_lifted(a_w, e.y, n, params)
    return apply_h_inverse(w, Utilde, Vtilde, w_hat), diag


def solve_nuclear(e: MeasurementEnsemble, params: SolverParams = SolverParams()) -> tuple[np.ndarray, Diagnostics]:
    none = np.zeros((e.n, 0))
    return solve_weighted_nuclear(e, WeightVector(1.0, 1.0, 1.0), none, none, params)


def relative_error(X: np.ndarray, X_hat: np.ndarray) -> float:
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    norm = float(np.linalg.norm(X))
    if norm == 0.0:
        raise UndefinedError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(X - X_hat)) / norm


def is_success(X: np.ndarray, X_hat: np.ndarray, threshold: float = 1e-2) -> bool:
    return relative_error(X, X_hat) <= threshold
