# cython: language_level=3
"""Compiled kernels for Marchenko-Pastur moment integrals and scalar helpers.

Same algorithms and signatures as ``_kernels_py``; the adaptive Simpson
recursion runs without the GIL.
"""

from libc.math cimport sin, cos, sqrt, asin, acos, fabs, M_PI

import numpy as np

from artifact.errors import NumericFailure

BACKEND = "compiled"

DEF MAX_DEPTH = 48
DEF PANELS = 4


cdef struct Params:
    double tau
    double lb
    double ub
    double s
    int power


cdef inline double _integrand(double theta, Params* p) noexcept nogil:
    cdef double sn = sin(theta)
    cdef double cs = cos(theta)
    cdef double width = p.ub - p.lb
    cdef double u = p.lb + width * sn * sn
    cdef double val, d
    if u <= 0.0:
        return 0.0
    val = 2.0 * width * width * sn * sn * cs * cs * sqrt((p.ub + u) * (u + p.lb)) / (M_PI * p.s * u)
    if p.power == 2:
        d = u - p.tau
        if d > 0.0:
            return val * d * d
        return 0.0
    return val


cdef double _refine(Params* p, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, int* failed) noexcept nogil:
    cdef double m = 0.5 * (a + b)
    cdef double lm = 0.5 * (a + m)
    cdef double rm = 0.5 * (m + b)
    cdef double flm = _integrand(lm, p)
    cdef double frm = _integrand(rm, p)
    cdef double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    cdef double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    cdef double delta = left + right - whole
    if fabs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        failed[0] = 1
        return left + right
    return (_refine(p, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
            + _refine(p, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed))


cdef double _simpson(Params* p, double a, double b, double tol, int* failed) noexcept nogil:
    cdef double total = 0.0
    cdef double h = (b - a) / PANELS
    cdef double lo, hi, mid, flo, fhi, fmid, whole
    cdef int k
    for k in range(PANELS):
        lo = a + k * h
        hi = lo + h
        mid = 0.5 * (lo + hi)
        flo = _integrand(lo, p)
        fhi = _integrand(hi, p)
        fmid = _integrand(mid, p)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        total += _refine(p, lo, hi, flo, fmid, fhi, whole, tol / PANELS, MAX_DEPTH, failed)
    return total


cdef inline double _theta_of(double x, double lb, double ub) noexcept nogil:
    cdef double frac = (x - lb) / (ub - lb)
    if frac < 0.0:
        frac = 0.0
    elif frac > 1.0:
        frac = 1.0
    return asin(sqrt(frac))


def mp_density(double u, double s):
    cdef double root = sqrt(s)
    cdef double lb = 1.0 - root
    cdef double ub = 1.0 + root
    cdef double q
    if u < lb or u > ub or u <= 0.0:
        return 0.0
    q = (ub * ub - u * u) * (u * u - lb * lb)
    if q < 0.0:
        q = 0.0
    return sqrt(q) / (M_PI * s * u)


cdef double _phi(double tau, double s, double tol, int* failed) noexcept nogil:
    cdef Params p
    cdef double root = sqrt(s)
    p.lb = 1.0 - root
    p.ub = 1.0 + root
    p.s = s
    p.tau = tau
    p.power = 2
    if tau >= p.ub:
        return 0.0
    return _simpson(&p, _theta_of(tau if tau > p.lb else p.lb, p.lb, p.ub), 0.5 * M_PI, tol, failed)


def phi(double tau, double s, double tol=1e-9):
    """Truncated second moment of the MP law: integral of (u - tau)_+^2."""
    cdef int failed = 0
    cdef double val
    with nogil:
        val = _phi(tau, s, tol, &failed)
    if failed:
        raise NumericFailure("adaptive Simpson exceeded its recursion depth")
    return val


def phi_many(taus, double s, double tol=1e-9):
    cdef double[::1] arr = np.ascontiguousarray(taus, dtype=np.float64).ravel()
    out = np.empty(arr.shape[0], dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t i
    cdef int failed = 0
    with nogil:
        for i in range(arr.shape[0]):
            res[i] = _phi(arr[i], s, tol, &failed)
    if failed:
        raise NumericFailure("adaptive Simpson exceeded its recursion depth")
    return out


def mp_cdf(double x, double s, double tol=1e-9):
    cdef Params p
    cdef int failed = 0
    cdef double root = sqrt(s)
    cdef double val
    p.lb = 1.0 - root
    p.ub = 1.0 + root
    p.s = s
    p.tau = 0.0
    p.power = 0
    if x <= p.lb:
        return 0.0
    if x >= p.ub:
        return 1.0
    with nogil:
        val = _simpson(&p, 0.0, _theta_of(x, p.lb, p.ub), tol, &failed)
    if failed:
        raise NumericFailure("adaptive Simpson exceeded its recursion depth")
    return val


def varphi(double alpha):
    cdef double a2
    if alpha <= 0.0:
        return (3.0 * M_PI - 16.0 * alpha + 3.0 * M_PI * alpha * alpha) / (3.0 * M_PI)
    if alpha >= 2.0:
        return 0.0
    a2 = alpha * alpha
    return (-(26.0 * alpha + a2 * alpha) * sqrt(4.0 - a2)
            + 24.0 * (1.0 + a2) * acos(0.5 * alpha)) / (12.0 * M_PI)


def shrinkage_sq(double g, double a):
    cdef double d = fabs(g) - a
    if d > 0.0:
        return d * d
    return 0.0
