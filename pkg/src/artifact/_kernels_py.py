"""Pure-Python kernels, used when the compiled extension is unavailable.

Mirrors ``_kernels.pyx`` function for function. Integrals over the
Marchenko-Pastur density are taken in the angle variable
``u = lb + (ub - lb) * sin(theta)**2``, which turns the square-root edges of
the density into a smooth integrand that adaptive Simpson handles well.
"""

from __future__ import annotations

import math

import numpy as np

from artifact.errors import NumericFailure

BACKEND = "python"

_MAX_DEPTH = 48
_PANELS = 4


def mp_density(u: float, s: float) -> float:
    root = math.sqrt(s)
    lb, ub = 1.0 - root, 1.0 + root
    if u < lb or u > ub or u <= 0.0:
        return 0.0
    return math.sqrt(max((ub * ub - u * u) * (u * u - lb * lb), 0.0)) / (math.pi * s * u)


def _integrand(theta: float, tau: float, lb: float, ub: float, s: float, power: int) -> float:
    sn = math.sin(theta)
    cs = math.cos(theta)
    width = ub - lb
    u = lb + width * sn * sn
    if u <= 0.0:
        return 0.0
    val = 2.0 * width * width * sn * sn * cs * cs * math.sqrt((ub + u) * (u + lb)) / (math.pi * s * u)
    if power == 2:
        d = u - tau
        return val * d * d if d > 0.0 else 0.0
    return val


def _simpson(f, a: float, b: float, tol: float) -> float:
    total = 0.0
    h = (b - a) / _PANELS
    for k in range(_PANELS):
        lo = a + k * h
        hi = lo + h
        flo, fhi = f(lo), f(hi)
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        total += _refine(f, lo, hi, flo, fmid, fhi, whole, tol / _PANELS, _MAX_DEPTH)
    return total


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise NumericFailure("adaptive Simpson exceeded its recursion depth")
    return _refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _refine(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


def _theta_of(x: float, lb: float, ub: float) -> float:
    frac = (x - lb) / (ub - lb)
    return math.asin(math.sqrt(min(max(frac, 0.0), 1.0)))


def phi(tau: float, s: float, tol: float = 1e-9) -> float:
    """Truncated second moment of the MP law: integral of (u - tau)_+^2."""
    root = math.sqrt(s)
    lb, ub = 1.0 - root, 1.0 + root
    if tau >= ub:
        return 0.0
    start = _theta_of(max(tau, lb), lb, ub)
    return _simpson(lambda th: _integrand(th, tau, lb, ub, s, 2), start, 0.5 * math.pi, tol)


def phi_many(taus, s: float, tol: float = 1e-9) -> np.ndarray:
    return np.array([phi(float(t), s, tol) for t in np.asarray(taus, dtype=float).ravel()])


def mp_cdf(x: float, s: float, tol: float = 1e-9) -> float:
    root = math.sqrt(s)
    lb, ub = 1.0 - root, 1.0 + root
    if x <= lb:
        return 0.0
    if x >= ub:
        return 1.0
    stop = _theta_of(x, lb, ub)
    return _simpson(lambda th: _integrand(th, 0.0, lb, ub, s, 0), 0.0, stop, tol)


def varphi(alpha: float) -> float:
    if alpha <= 0.0:
        return (3.0 * math.pi - 16.0 * alpha + 3.0 * math.pi * alpha * alpha) / (3.0 * math.pi)
    if alpha >= 2.0:
        return 0.0
    a2 = alpha * alpha
    return (
        -(26.0 * alpha + a2 * alpha) * math.sqrt(4.0 - a2) + 24.0 * (1.0 + a2) * math.acos(0.5 * alpha)
    ) / (12.0 * math.pi)


def shrinkage_sq(g: float, a: float) -> float:
    d = abs(g) - a
    return d * d if d > 0.0 else 0.0
