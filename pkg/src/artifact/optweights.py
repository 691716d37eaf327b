"""Optimal weights by cyclic coordinate descent on the weighted threshold function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from artifact._search import INV_GOLDEN, gss
from artifact.errors import ConfigError
from artifact.geometry import SubspacePrior
from artifact.sdim import Pairing, SupportConstant, scale_bracket, psi_weighted
from artifact.weighting import WeightVector, weights_consistent

__all__ = [
    "INV_GOLDEN",
    "OptimizerConfig",
    "OptimalWeights",
    "gss",
    "optimize_weights",
    "weights_consistency_check",
]

DESCENT_SLACK = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    tol: float = 1e-6
    maxiter: int = 200
    gss_maxiter: int = 100
    bracket_hi: float | None = None
    floor: float = 1e-8
    pairing: Pairing = "angle"
    support_constant: SupportConstant = "exact"

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.maxiter < 1 or self.gss_maxiter < 1:
            raise ConfigError("iteration caps must be at least 1")
        if self.bracket_hi is not None and not self.bracket_hi > 0:
            raise ConfigError("bracket_hi must be positive")

    def upper(self, n: int) -> float:
        hi = scale_bracket(n) if self.bracket_hi is None else self.bracket_hi
        if self.floor >= hi:
            raise ConfigError(f"empty search interval ({self.floor}, {hi}]")
        return hi


class OptimalWeights(NamedTuple):
    v_star: tuple[float, float, float]
    w_star: WeightVector
    m_hat: float
    iterations: int
    history: tuple[float, ...]


def optimize_weights(
    p: SubspacePrior,
    cfg: OptimizerConfig = OptimizerConfig(),
    start: Sequence[float] | None = None,
) -> OptimalWeights:
    """Minimize ``psi_weighted(v)`` over positive ``v`` one coordinate at a time.

    Each sweep runs a golden-section search on each of the three coordinates with
    the others held fixed; a coordinate only moves when that does not raise the
    objective. Stops when a sweep moves ``v`` by less than ``tol`` or improves the
    objective by less than ``tol``.
    """
    q, _ = p.clamped()
    hi = cfg.upper(p.n)
    f = lambda x: psi_weighted(x, q, cfg.pairing, cfg.support_constant)
    v = np.ones(3) if start is None else np.array(start, dtype=float)
    if v.shape != (3,) or np.any(v <= 0):
        raise ConfigError("start must be three positive numbers")
    v = np.clip(v, cfg.floor, hi)
    value = f(v)
    history = [value]
    it = 0
    for it in range(1, cfg.maxiter + 1):
        before, before_value = v.copy(), value
        for i in range(3):
            def along(z: float, i: int = i) -> float:
                trial = v.copy()
                trial[i] = z
                return f(trial)

            z = gss(along, cfg.floor, hi, tol=cfg.tol, maxiter=cfg.gss_maxiter)
            candidate = along(z)
            if candidate <= value:
                v[i], value = z, candidate
            assert value <= history[-1] + DESCENT_SLACK
            history.append(value)
        if np.linalg.norm(v - before) < cfg.tol or before_value - value < cfg.tol:
            break
    w = WeightVector(*v)
    return OptimalWeights(tuple(float(x) for x in v), w.normalized(), value / p.n**2, it, tuple(history))


class ConsistencyReport(NamedTuple):
    consistent: bool
    expected_w4: float
    relative_error: float


def weights_consistency_check(w: Sequence[float], rel_tol: float = 1e-3) -> ConsistencyReport:
    """Check a reported ``(w1, w2, w3, w4)`` against the constraint ``w4 = w2 w3 / w1``."""
    w1, w2, w3, w4 = (float(x) for x in w)
    expect = w2 * w3 / w1
    return ConsistencyReport(weights_consistent(w, rel_tol), expect, abs(w4 - expect) / abs(expect))


def direction_cosine(a: Sequence[float], b: Sequence[float]) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def full_tuple(v: Sequence[float]) -> tuple[float, float, float, float]:
    v1, v2, v3 = (float(x) for x in v)
    return (v1, v2, v3, v2 * v3 / v1)


def log_grid_best(p: SubspacePrior, points: int = 21, decades: float = 8.0) -> tuple[np.ndarray, float]:
    """Best ``psi_weighted`` over a log grid of the ratios ``v2/v1`` and ``v3/v1``.

    Each grid direction is evaluated at its best scale, found by golden-section
    search with the largest coordinate confined to the optimizer's bracket.
    """
    q, _ = p.clamped()
    hi = scale_bracket(p.n)
    best_v, best = np.ones(3), math.inf
    exps = np.linspace(-decades / 2, decades / 2, points)
    for a in exps:
        for b in exps:
            d = np.array([1.0, 10.0**a, 10.0**b])
            d /= d.max()
            t = gss(lambda s: psi_weighted(s * d, q), 1e-8, hi, tol=1e-7)
            val = psi_weighted(t * d, q)
            if val < best:
                best_v, best = t * d, val
    return best_v, best
