"""Golden-section search, scalar and vectorized over independent problems."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def gss(f: Callable[[float], float], a: float, b: float, tol: float = 1e-6, maxiter: int = 100) -> float:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns the better of the two final probes."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    x1 = a + (1.0 - INV_GOLDEN) * (b - a)
    x2 = a + INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    k = 0
    while b - a >= tol and k < maxiter:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = a + (1.0 - INV_GOLDEN) * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_GOLDEN * (b - a)
            f2 = f(x2)
        k += 1
    return x1 if f1 <= f2 else x2


def gss_batch(
    f: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    tol: float = 1e-9,
    maxiter: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Run independent golden-section searches in lockstep.

    ``f`` maps an array of abscissae (one per problem) to objective values.
    Returns the minimizers and their objective values.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    x1 = a + (1.0 - INV_GOLDEN) * (b - a)
    x2 = a + INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if np.all(b - a < tol):
            break
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        keep = np.where(left, x1, x2)
        fkeep = np.where(left, f1, f2)
        probe = np.where(left, a + (1.0 - INV_GOLDEN) * (b - a), a + INV_GOLDEN * (b - a))
        fprobe = f(probe)
        x1, f1, x2, f2 = (
            np.where(left, probe, keep),
            np.where(left, fprobe, fkeep),
            np.where(left, keep, probe),
            np.where(left, fkeep, fprobe),
        )
    better = f1 <= f2
    return np.where(better, x1, x2), np.where(better, f1, f2)
