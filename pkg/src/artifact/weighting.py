"""The block-weighted operator h_w and its factorization in the adapted bases.

``h_w(Z) = w1 Pu Z Pv + w2 Pu Z Pv' + w3 Pu' Z Pv + w4 Pu' Z Pv'`` where Pu, Pv
project onto the prior spans, primes denote complements and ``w4 = w2 w3 / w1``.
Equivalently ``h_w(Z) = (w1 Pu + w3 Pu') Z (w3 Pv + w4 Pv') / w3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from artifact.errors import InvalidWeights
from artifact.geometry import BasisPair, GroundTruth, SubspacePrior
from artifact.numerics import SvdTriple


@dataclass(frozen=True)
class WeightVector:
    """Three free weights; the complement-complement weight is derived."""

    w1: float
    w2: float
    w3: float

    def __post_init__(self) -> None:
        vals = (self.w1, self.w2, self.w3)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise InvalidWeights(f"weights must be finite and positive, got {vals}")
        for name, v in zip(("w1", "w2", "w3"), vals):
            object.__setattr__(self, name, float(v))

    @property
    def w4(self) -> float:
        return self.w2 * self.w3 / self.w1

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)

    def reciprocal(self) -> "WeightVector":
        return WeightVector(1.0 / self.w1, 1.0 / self.w2, 1.0 / self.w3)

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(c * self.w1, c * self.w2, c * self.w3)

    def normalized(self) -> "WeightVector":
        """Scaled so that the largest of the four weights equals one."""
        return self.scaled(1.0 / max(self.as_tuple()))


def weights_consistent(w: Sequence[float], rel_tol: float = 1e-3) -> bool:
    """Whether a reported 4-tuple satisfies ``w4 = w2 w3 / w1`` to ``rel_tol``."""
    w1, w2, w3, w4 = (float(x) for x in w)
    expect = w2 * w3 / w1
    return abs(w4 - expect) <= rel_tol * abs(expect)


def _projector(basis: np.ndarray) -> np.ndarray:
    return basis @ basis.T


def apply_h(w: WeightVector, Utilde: np.ndarray, Vtilde: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Apply h_w to a matrix or a stack of matrices (last two axes)."""
    pu = _projector(Utilde)
    pv = _projector(Vtilde)
    on_u = pu @ Z
    off_u = Z - on_u
    on_u_on_v = on_u @ pv
    off_u_on_v = off_u @ pv
    return (
        w.w1 * on_u_on_v
        + w.w2 * (on_u - on_u_on_v)
        + w.w3 * off_u_on_v
        + w.w4 * (off_u - off_u_on_v)
    )


def apply_h_inverse(w: WeightVector, Utilde: np.ndarray, Vtilde: np.ndarray, W: np.ndarray) -> np.ndarray:
    return apply_h(w.reciprocal(), Utilde, Vtilde, W)


@dataclass(frozen=True)
class WeightedDecomposition:
    """Rotation times upper-triangular factors of the two one-sided weight maps.

    In basis coordinates ``w1 Pu + w3 Pu' = B_L left_rotation left_triangular B_L^T``
    and ``w3 Pv + w4 Pv' = B_R right_rotation right_triangular B_R^T``. The 1-D
    ``*_core`` and ``*_coupling`` arrays are the diagonal and off-diagonal entries
    of the leading 2r x 2r triangular block, in basis-column order.
    """

    basis: BasisPair
    weights: WeightVector
    rank: int
    left_rotation: np.ndarray
    left_triangular: np.ndarray
    right_rotation: np.ndarray
    right_triangular: np.ndarray
    left_core: np.ndarray
    right_core: np.ndarray
    left_coupling: np.ndarray
    right_coupling: np.ndarray

    @property
    def left_frame(self) -> np.ndarray:
        return self.basis.B_L @ self.left_rotation

    @property
    def right_frame(self) -> np.ndarray:
        return self.basis.B_R @ self.right_rotation

    def apply(self, Z: np.ndarray) -> np.ndarray:
        """h_w(Z) evaluated through the factorization."""
        b_l, b_r = self.basis.B_L, self.basis.B_R
        left = b_l @ self.left_rotation @ self.left_triangular @ b_l.T
        right = b_r @ self.right_triangular.T @ self.right_rotation.T @ b_r.T
        return left @ Z @ right / self.weights.w3


def _one_side(on: float, off: float, angles: np.ndarray, widths: tuple[int, int, int, int]):
    """Factor ``on * P + off * P'`` restricted to the adapted basis of one side."""
    r, _, extra, rest = widths
    n = sum(widths)
    c, s = np.cos(angles), np.sin(angles)
    core = np.sqrt(on**2 * c**2 + off**2 * s**2)
    diag_entry = on * c**2 + off * s**2
    off_entry = (off - on) * s * c
    rot = np.eye(n)
    tri = np.zeros((n, n))
    i = np.arange(r)
    j = r + i
    rot[i, i] = diag_entry / core
    rot[j, j] = diag_entry / core
    rot[j, i] = off_entry / core
    rot[i, j] = -off_entry / core
    coupling = (off**2 - on**2) * s * c / core
    tri[i, i] = core
    tri[i, j] = coupling
    tri[j, j] = on * off / core
    k = np.arange(2 * r, 2 * r + extra)
    tri[k, k] = on
    k = np.arange(2 * r + extra, 2 * r + extra + rest)
    tri[k, k] = off
    return rot, tri, core, coupling


def decompose(w: WeightVector, bp: BasisPair, p: SubspacePrior) -> WeightedDecomposition:
    lrot, ltri, lcore, lcoup = _one_side(w.w1, w.w3, p.columns_u(), bp.widths)
    rrot, rtri, rcore, rcoup = _one_side(w.w3, w.w4, p.columns_v(), bp.widths)
    return WeightedDecomposition(bp, w, p.r, lrot, ltri, rrot, rtri, lcore, rcore, lcoup, rcoup)


def weighted_svd(gt: GroundTruth, dec: WeightedDecomposition) -> SvdTriple:
    """SVD of h_w(X) read off the factorization, sorted non-increasingly."""
    r = dec.rank
    values = dec.left_core * gt.sigma * dec.right_core / dec.weights.w3
    order = np.argsort(-values, kind="stable")
    left = dec.left_frame[:, :r][:, order]
    right = dec.right_frame[:, :r][:, order]
    return SvdTriple(left, values[order], right)


class SupportProjectors(NamedTuple):
    sign: np.ndarray
    tangent: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]


def support_projectors(dec: WeightedDecomposition) -> SupportProjectors:
    """Sign of h_w(X) and orthogonal projections onto its support and the complement."""
    r = dec.rank
    left, right = dec.left_frame, dec.right_frame
    sign = left[:, :r] @ right[:, :r].T
    left_out = _projector(left[:, r:])
    right_out = _projector(right[:, r:])

    def normal(Z: np.ndarray) -> np.ndarray:
        return left_out @ Z @ right_out

    def tangent(Z: np.ndarray) -> np.ndarray:
        return Z - normal(Z)

    return SupportProjectors(sign, tangent, normal)
