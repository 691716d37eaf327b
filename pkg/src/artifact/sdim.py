"""Sample-complexity thresholds for nuclear and weighted nuclear-norm recovery.

Thresholds are upper estimates of the statistical dimension of the descent cone,
normalized by ``n**2``. Both closed forms partition the complement of the signal
block into a 3 x 3 grid of blocks with row/column widths ``(r, r' - r, n - r - r')``,
give each block a share ``alpha`` of the unit spectral ball, and charge each
block the expected Gaussian shrinkage through ``phi``.

The Monte-Carlo oracle estimates the same dimension directly from Gaussian draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from artifact._search import gss, gss_batch
from artifact.errors import InvalidWeights, NumericFailure
from artifact.geometry import PriorInstance, SubspacePrior
from artifact.numerics import MpParams, gaussian_matrix, phi_many
from artifact.weighting import WeightVector, apply_h

SupportConstant = Literal["exact", "printed"]
Pairing = Literal["angle", "sorted"]


class BlockRatios(NamedTuple):
    a22: float
    a23: float
    a24: float
    a33: float
    a34: float
    a44: float


def alpha_ratios(n: int, r: int, r_prime: int) -> BlockRatios:
    """Shares of the spectral ball given to each block, proportional to block area."""
    a, b = r_prime - r, n - r - r_prime
    d = float((n - r) ** 2)
    return BlockRatios(r * r / d, r * a / d, r * b / d, a * a / d, a * b / d, b * b / d)


def _aspect(rows: int, cols: int) -> float:
    if rows == 0 or cols == 0:
        return 0.0
    return min(rows, cols) / max(rows, cols)


def aspect_ratios(n: int, r: int, r_prime: int) -> tuple[float, float, float]:
    """Aspect ratios of the (r, r'-r), (r, n-r-r') and (r'-r, n-r-r') blocks; 0 if empty."""
    a, b = r_prime - r, n - r - r_prime
    return (_aspect(r, a), _aspect(r, b), _aspect(a, b))


def support_dimension(n: int, r: int, constant: SupportConstant = "exact") -> int:
    """Expected squared norm of the Gaussian part living on the signal's row/column spaces.

    ``"exact"`` counts all ``r^2 + 2 r (n - r)`` coordinates; ``"printed"`` keeps only
    the three ``r x r`` blocks of the angle block (``3 r^2``).
    """
    if constant == "exact":
        return 2 * n * r - r * r
    if constant == "printed":
        return 3 * r * r
    raise ValueError(f"unknown support constant {constant!r}")


def _block(thresholds: np.ndarray | float, rows: int, cols: int) -> float:
    """``max * sum_{i < min} phi(f_i / sqrt(max), min/max)`` for a rows x cols Gaussian block."""
    if rows == 0 or cols == 0:
        return 0.0
    lo, hi = min(rows, cols), max(rows, cols)
    f = np.broadcast_to(np.asarray(thresholds, dtype=float), (lo,)) if np.ndim(thresholds) == 0 else np.asarray(thresholds)[:lo]
    return hi * float(np.sum(phi_many(f / math.sqrt(hi), MpParams(lo / hi))))


def psi_nuclear(t: float, n: int, r: int, r_prime: int, support_constant: SupportConstant = "exact") -> float:
    """Unnormalized threshold function of the unweighted program at scale ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if r == 0:
        return 0.0
    a, b = r_prime - r, n - r - r_prime
    al = alpha_ratios(n, r, r_prime)
    total = support_dimension(n, r, support_constant) + t * t * r
    total += _block(t * al.a22, r, r)
    total += 2.0 * _block(t * al.a23, r, a)
    total += 2.0 * _block(t * al.a24, r, b)
    total += 2.0 * _block(t * al.a34, a, b)
    total += _block(t * al.a33, a, a)
    total += _block(t * al.a44, b, b)
    return total


class PsiTerms(NamedTuple):
    """Pieces of the weighted threshold function, for inspection and testing."""

    support: float
    trig: float
    correction: float
    e22: np.ndarray
    gains: np.ndarray
    blocks: float

    @property
    def total(self) -> float:
        return self.support + self.trig + self.correction + self.blocks


def _gain_matrix(v1, v2, v3, v4, inv_left, inv_right, r, a, b) -> np.ndarray:
    """Coefficient by which each entry of the off-support spectral-ball variable is scaled."""
    size = r + a + b
    g = np.empty((size, size))
    s2, s3, s4 = slice(0, r), slice(r, r + a), slice(r + a, size)
    g[s2, s2] = v1 * v3 * v4 * np.outer(inv_left, inv_right)
    g[s2, s3] = (v1 * v3 * inv_left)[:, None]
    g[s2, s4] = (v1 * v4 * inv_left)[:, None]
    g[s3, s2] = (v2 * v3 * inv_right)[None, :]
    g[s3, s3] = v1
    g[s3, s4] = v2
    g[s4, s2] = (v3 * v4 * inv_right)[None, :]
    g[s4, s3] = v3
    g[s4, s4] = v4
    return g


def psi_weighted_terms(
    v: Sequence[float],
    p: SubspacePrior,
    pairing: Pairing = "angle",
    support_constant: SupportConstant = "exact",
) -> PsiTerms:
    v1, v2, v3 = (float(x) for x in v)
    n, r, rp = p.n, p.r, p.r_prime
    a, b = rp - r, n - r - rp
    support = float(support_dimension(n, r, support_constant))
    if v1 == 0.0 and v2 == 0.0 and v3 == 0.0:
        blocks = psi_nuclear(0.0, n, r, rp, support_constant) - support
        return PsiTerms(support, 0.0, 0.0, np.zeros(r), np.zeros((n - r, n - r)), blocks)
    if min(v1, v2, v3) <= 0.0:
        raise InvalidWeights(f"scaled weights must be positive (or all zero), got {(v1, v2, v3)}")
    v4 = v2 * v3 / v1

    thu, thv = p.columns_u(), p.columns_v()
    cu, su, cv, sv = np.cos(thu), np.sin(thu), np.cos(thv), np.sin(thv)
    cu2, su2, cv2, sv2 = cu**2, su**2, cv**2, sv**2

    mixed = v1**2 * cu2 * cv2 + v2**2 * cu2 * sv2 + v3**2 * su2 * cv2 + v4**2 * su2 * sv2
    trig = float(np.sum(mixed))

    left_sq = v1**2 * cu2 + v3**2 * su2
    right_scaled_sq = v1**2 * cv2 + v2**2 * sv2
    correction = (v4 / v3 - 1.0) ** 2 * (v1 + v2) ** 2 * float(np.sum(left_sq / right_scaled_sq * sv2 * cv2))
    correction += (v3 / v1 - 1.0) ** 2 * (v1 + v3) ** 2 * float(np.sum(right_scaled_sq / left_sq * su2 * cu2))

    e22 = (v4**2 - v3**2 - v2**2 + v1**2) / np.sqrt(mixed) * su * cu * sv * cv

    inv_left = 1.0 / np.sqrt(left_sq)
    inv_right = 1.0 / np.sqrt(v3**2 * cv2 + v4**2 * sv2)
    gains = _gain_matrix(v1, v2, v3, v4, inv_left, inv_right, r, a, b)

    al = alpha_ratios(n, r, rp)
    if pairing == "angle":
        f22 = np.abs(e22) + v1 * v3 * v4 * inv_left * inv_right * al.a22
    elif pairing == "sorted":
        desc = lambda x: np.sort(x)[::-1]
        f22 = desc(np.abs(e22)) + v1 * v3 * v4 * desc(inv_left) * desc(inv_right) * al.a22
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    left_desc = np.sort(inv_left)[::-1]
    right_desc = np.sort(inv_right)[::-1]

    blocks = r * float(np.sum(phi_many(f22 / math.sqrt(r), MpParams(1.0))))
    blocks += _block(v1 * v3 * left_desc * al.a23, r, a)
    blocks += _block(v1 * v4 * left_desc * al.a24, r, b)
    blocks += _block(v2 * v3 * right_desc * al.a23, a, r)
    blocks += _block(v1 * al.a33, a, a)
    blocks += _block(v2 * al.a34, a, b)
    blocks += _block(v3 * v4 * right_desc * al.a24, b, r)
    blocks += _block(v3 * al.a34, b, a)
    blocks += _block(v4 * al.a44, b, b)
    return PsiTerms(support, trig, correction, e22, gains, blocks)


def psi_weighted(
    v: Sequence[float],
    p: SubspacePrior,
    pairing: Pairing = "angle",
    support_constant: SupportConstant = "exact",
) -> float:
    """Unnormalized threshold function of the weighted program at scaled weights ``v = t w``."""
    return psi_weighted_terms(v, p, pairing, support_constant).total


def scale_bracket(n: int) -> float:
    """Upper end of the interval known to contain the minimizing scale."""
    root = math.sqrt(n * n + 1.0)
    return n * (1.0 + (n * n + 1.0) ** 0.25 / math.sqrt(root - n))


def angle_constant(p: SubspacePrior) -> float:
    """Product of the worst sine/cosine of the extreme angles on each side."""
    side = lambda th: min(math.sin(math.radians(th[0])), math.cos(math.radians(th[-1])))
    return side(p.theta_u) * side(p.theta_v)


def error_band(n: int, r: int, c: float = 1.0) -> float:
    return 2.0 / (n * math.sqrt(n * r) * c)


@dataclass(frozen=True)
class ThresholdReport:
    m_hat: float
    t_star: float
    v_star: tuple[float, float, float]
    error_band: float
    error_lower: float
    alpha: BlockRatios
    s_ratios: tuple[float, float, float]
    clamped: bool = False


SCALE_TOL = 1e-9


def nuclear_threshold(
    n: int, r: int, r_prime: int, support_constant: SupportConstant = "exact"
) -> ThresholdReport:
    """Minimize ``psi_nuclear`` over ``t`` in ``[0, 3 sqrt(n)]`` and normalize by ``n^2``."""
    if r == 0:
        return ThresholdReport(0.0, 0.0, (0.0, 0.0, 0.0), 0.0, 0.0, alpha_ratios(n, 0, r_prime), (0.0, 0.0, 0.0))
    f = lambda t: psi_nuclear(t, n, r, r_prime, support_constant)
    t_star = gss(f, 0.0, 3.0 * math.sqrt(n), tol=SCALE_TOL, maxiter=200)
    m_hat = min(f(t_star), f(0.0)) / n**2
    band = error_band(n, r)
    return ThresholdReport(
        m_hat, t_star, (t_star,) * 3, band, max(0.0, m_hat - band),
        alpha_ratios(n, r, r_prime), aspect_ratios(n, r, r_prime),
    )


def weighted_threshold(
    w: WeightVector | Sequence[float],
    p: SubspacePrior,
    pairing: Pairing = "angle",
    support_constant: SupportConstant = "exact",
) -> ThresholdReport:
    """Minimize ``psi_weighted(t w)`` over ``t`` and attach the angle-dependent error band.

    Angles are first clamped away from 0 and 90 degrees; ``clamped`` records whether
    that changed anything.
    """
    w = w if isinstance(w, WeightVector) else WeightVector(*w)
    q, clamped = p.clamped()
    direction = np.array([w.w1, w.w2, w.w3]) / max(w.as_tuple())
    f = lambda t: psi_weighted(t * direction, q, pairing, support_constant)
    hi = scale_bracket(p.n)
    t_star = gss(f, 0.0, hi, tol=SCALE_TOL * hi, maxiter=200)
    val = f(t_star)
    if f(0.0) < val:
        t_star, val = 0.0, f(0.0)
    m_hat = val / p.n**2
    band = error_band(p.n, p.r, angle_constant(q))
    v_star = tuple(float(x) for x in t_star * direction)
    return ThresholdReport(
        m_hat, t_star, v_star, band, max(0.0, m_hat - band),
        alpha_ratios(p.n, p.r, p.r_prime), aspect_ratios(p.n, p.r, p.r_prime), clamped,
    )


def transition_bounds(delta_normalized: float, eta: float, ambient: int) -> tuple[int, int]:
    """Measurement counts above which recovery succeeds, and below which it fails, w.p. >= 1 - eta."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    width = math.sqrt(8.0 * math.log(4.0 / eta) * ambient)
    centre = delta_normalized * ambient
    return math.ceil(centre + width), math.floor(centre - width)


class MCEstimate(NamedTuple):
    """Normalized sample mean and standard error; ``discarded`` counts unconverged draws."""

    mean: float
    stderr: float
    trials: int
    discarded: int


def _summarize(values: np.ndarray, n: int, discarded: int) -> MCEstimate:
    k = values.size
    if k == 0:
        raise NumericFailure("every Monte-Carlo draw was discarded")
    mean = float(values.mean()) / n**2
    err = float(values.std(ddof=1) / math.sqrt(k)) / n**2 if k > 1 else math.nan
    return MCEstimate(mean, err, k, discarded)


def _draws(n: int, trials: int, seed: int) -> np.ndarray:
    return np.stack([gaussian_matrix(n, n, seed + k) for k in range(trials)])


def _complement(basis: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(basis, mode="complete")
    return q[:, basis.shape[1] :]


def _mc_nuclear(inst: PriorInstance, g: np.ndarray) -> np.ndarray:
    U, V = inst.truth.U, inst.truth.V
    r = U.shape[1]
    uc, vc = _complement(U), _complement(V)
    inner = uc.T @ g @ vc
    outer_sq = np.sum(g**2, axis=(1, 2)) - np.sum(inner**2, axis=(1, 2))
    corr = np.einsum("bij,ij->b", g, U @ V.T)
    sv = np.linalg.svd(inner, compute_uv=False) if inner.shape[1] else np.zeros((g.shape[0], 0))

    def dist(t: np.ndarray) -> np.ndarray:
        shrink = np.sum(np.maximum(sv - t[:, None], 0.0) ** 2, axis=1)
        return outer_sq - 2.0 * t * corr + t * t * r + shrink

    hi = np.max(sv, axis=1, initial=0.0) + np.abs(corr) / r + 1.0
    _, vals = gss_batch(dist, np.zeros(g.shape[0]), hi, tol=1e-10, maxiter=200)
    return np.minimum(vals, dist(np.zeros(g.shape[0])))


def _project_spectral_cone(t: np.ndarray, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean projection of each ``(t, K)`` onto ``{||K||_2 <= t}``."""
    u, s, vt = np.linalg.svd(k)
    batch, p = s.shape
    csum = np.concatenate([np.zeros((batch, 1)), np.cumsum(s, axis=1)], axis=1)
    cand = (t[:, None] + csum) / np.arange(1, p + 2)
    upper = np.concatenate([np.full((batch, 1), np.inf), s], axis=1)
    lower = np.concatenate([s, np.full((batch, 1), -np.inf)], axis=1)
    pick = np.argmax((cand <= upper) & (cand >= lower), axis=1)
    t_new = np.maximum(cand[np.arange(batch), pick], 0.0)
    s_new = np.minimum(s, t_new[:, None])
    return t_new, np.einsum("bij,bj,bjk->bik", u, s_new, vt)


MC_REL_TOL = 1e-8
MC_MAX_ITER = 5000


def _mc_weighted(w: WeightVector, inst: PriorInstance, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per draw, ``min over t >= 0, ||K|| <= t`` of ``||G - t h(S) - h(Q_L K Q_R^T)||^2``.

    ``S`` is the sign of h_w(X) and ``Q_L, Q_R`` span the complement of its
    support, all read off a direct SVD of h_w(X). Accelerated projected gradient
    with restarts; returns the values and a per-draw convergence flag.
    """
    ut, vt = inst.Utilde, inst.Vtilde
    h = lambda z: apply_h(w, ut, vt, z)
    r = inst.truth.U.shape[1]
    lu, _, lvt = np.linalg.svd(h(inst.truth.matrix))
    sign_img = h(lu[:, :r] @ lvt[:r])
    ql, qr = lu[:, r:], lvt[r:].T

    def forward(t, k):
        return t[:, None, None] * sign_img + h(ql @ k @ qr.T)

    def adjoint(res):
        return np.einsum("bij,ij->b", res, sign_img), ql.T @ h(res) @ qr

    rng = np.random.default_rng(0)
    t_probe, k_probe = rng.standard_normal(1), rng.standard_normal((1,) + (ql.shape[1],) * 2)
    lip = 1.0
    for _ in range(100):
        norm = math.sqrt(float(t_probe @ t_probe + np.sum(k_probe**2)))
        t_probe, k_probe = t_probe / norm, k_probe / norm
        t_probe, k_probe = adjoint(forward(t_probe, k_probe))
        lip = math.sqrt(float(t_probe @ t_probe + np.sum(k_probe**2)))
    step = 1.0 / (1.01 * lip)

    batch = g.shape[0]
    t = np.zeros(batch)
    k = np.zeros((batch, ql.shape[1], ql.shape[1]))
    ty, ky, mom = t.copy(), k.copy(), np.ones(batch)
    obj = np.sum(g**2, axis=(1, 2))
    rel = np.full(batch, np.inf)
    for _ in range(MC_MAX_ITER):
        gt, gk = adjoint(forward(ty, ky) - g)
        t_new, k_new = _project_spectral_cone(ty - step * gt, ky - step * gk)
        obj_new = np.sum((g - forward(t_new, k_new)) ** 2, axis=(1, 2))
        restart = obj_new > obj
        mom_new = np.where(restart, 1.0, (1.0 + np.sqrt(1.0 + 4.0 * mom**2)) / 2.0)
        beta = np.where(restart, 0.0, (mom - 1.0) / mom_new)
        ty = t_new + beta * (t_new - t)
        ky = k_new + beta[:, None, None] * (k_new - k)
        rel = np.abs(obj - obj_new) / np.maximum(obj_new, 1e-300)
        t, k, mom, obj = t_new, k_new, mom_new, obj_new
        if np.all((rel < MC_REL_TOL) & ~restart):
            break
    return obj, rel < 1e3 * MC_REL_TOL


def mc_statistical_dimension(
    program: Literal["nuclear"] | WeightVector,
    instance: PriorInstance,
    trials: int,
    seed: int,
) -> MCEstimate:
    """Monte-Carlo estimate of the normalized statistical dimension of the descent cone.

    Draw ``k`` uses the Gaussian seeded with ``seed + k``. For the weighted program
    the scale ``t`` is optimized per draw jointly with the spectral-ball variable,
    so the estimate targets ``E inf_t dist^2`` exactly as in the unweighted case.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    n = instance.truth.U.shape[0]
    g = _draws(n, trials, seed)
    if isinstance(program, str):
        if program != "nuclear":
            raise ValueError(f"unknown program {program!r}")
        return _summarize(_mc_nuclear(instance, g), n, 0)
    vals, ok = _mc_weighted(program, instance, g)
    return _summarize(vals[ok], n, int(np.sum(~ok)))
