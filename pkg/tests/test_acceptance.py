"""Acceptance criteria, one test each, at their stated tolerances.

Every criterion prints a single ``ACCEPTANCE <k> PASS|FAIL`` line with the
measured values, both under pytest (terminal summary) and when run directly:

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import math
import os
import time

import numpy as np
import pytest

from artifact import cli, geometry, numerics, recovery, sdim, weighting
from artifact.geometry import SubspacePrior
from artifact.optweights import direction_cosine, full_tuple, optimize_weights
from artifact.weighting import WeightVector

RESULTS: dict[int, str] = {}

STRONG_PRIOR = SubspacePrior(10, 3, 3, [0.0196, 0.0156, 0.005], [0.0258, 0.0146, 0.0098])
STRONG_REPORTED = (4.8808e-4, 0.0907, 0.1002, 18.6213)
WEAK_PRIOR = SubspacePrior(
    20, 5, 5, [74.75, 68.0787, 65.8337, 56.3507, 52.5944], [89.2984, 73.4526, 62.7018, 55.48, 46.3011]
)
WEAK_REPORTED = (2.9837, 2.9356, 2.9153, 2.8683)


def record(k: int, name: str, ok: bool, detail: str, seconds: float) -> bool:
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'} [{name}] {detail} ({seconds:.1f}s)"
    RESULTS[k] = line
    print(line)
    return ok


def strong_prior_weights() -> tuple[bool, str]:
    res = optimize_weights(STRONG_PRIOR)
    cos = direction_cosine(full_tuple(res.v_star), STRONG_REPORTED)
    w = res.w_star.as_tuple()
    return cos >= 0.99, f"cosine={cos:.5f} w*={tuple(round(x, 5) for x in w)} m_hat={res.m_hat:.4f}"


def weak_prior_weights() -> tuple[bool, str]:
    res = optimize_weights(WEAK_PRIOR)
    cos = direction_cosine(full_tuple(res.v_star), WEAK_REPORTED)
    w = res.w_star.as_tuple()
    return cos >= 0.99, f"cosine={cos:.5f} w*={tuple(round(x, 4) for x in w)}"


def equal_weight_reduction() -> tuple[bool, str]:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(3, 30))
        r = int(rng.integers(1, n // 2 + 1))
        rp = int(rng.integers(r, n - r + 1))
        t = float(rng.uniform(0.01, 5.0))
        p = SubspacePrior(n, r, rp, rng.uniform(0, 90, r), rng.uniform(0, 90, r))
        a, b = sdim.psi_weighted((t, t, t), p), sdim.psi_nuclear(t, n, r, rp)
        worst = max(worst, abs(a - b) / abs(b))
    return worst <= 1e-8, f"max relative gap={worst:.2e} over 10 tuples"


def error_band() -> tuple[bool, str]:
    parts, ok = [], True
    for k in range(5):
        rng = np.random.default_rng(500 + k)
        p = SubspacePrior(10, 3, 3, rng.uniform(5, 85, 3), rng.uniform(5, 85, 3))
        inst = geometry.make_prior_instance(p, seed=k)
        w = WeightVector(*optimize_weights(p).v_star)
        rep = sdim.weighted_threshold(w, p)
        est = sdim.mc_statistical_dimension(w, inst, trials=500, seed=10_000 * (k + 1))
        lo = rep.m_hat - rep.error_band - 3 * est.stderr
        hi = rep.m_hat + 3 * est.stderr
        inside = lo <= est.mean <= hi and est.discarded == 0
        ok &= inside
        parts.append(f"#{k}: mc={est.mean:.3f}+-{est.stderr:.3f} in [{lo:.3f},{hi:.3f}]={inside}")
    return ok, "; ".join(parts)


def shrinkage_table() -> tuple[bool, str]:
    parts, ok = [], True
    for n1, n2, gamma, ref_s, ref_sap in cli.TABLE_ROWS:
        f = numerics.table_thresholds(n1, n2, gamma, seed=0)
        s = numerics.expected_shrinkage_mc(n1, n2, f, trials=5000, seed=10_000)
        sap = numerics.expected_shrinkage_mp(n1, n2, f)
        good_s, good_sap = abs(s - ref_s) <= 0.02, abs(sap - ref_sap) <= 0.01
        ok &= good_s and good_sap
        parts.append(
            f"({n1},{n2},{gamma}): S={s:.4f}/{ref_s} {'ok' if good_s else 'off'}, "
            f"S_ap={sap:.4f}/{ref_sap} {'ok' if good_sap else 'off'}"
        )
    return ok, "; ".join(parts)


def marchenko_pastur() -> tuple[bool, str]:
    ks = numerics.mp_ks_distance(400, 800, seed=0)
    phi0 = numerics.phi(0.0, numerics.MpParams(1.0))
    grid = np.linspace(0.0, 2.0, 9)
    gap = max(abs(numerics.varphi(a) - numerics.phi(a, numerics.MpParams(1.0))) for a in grid)
    ok = ks <= 0.05 and abs(phi0 - 1.0) <= 1e-6 and gap <= 1e-6
    return ok, f"KS={ks:.4f} phi(0,1)-1={phi0 - 1:.1e} max|varphi-phi|={gap:.1e}"


def phase_separation() -> tuple[bool, str]:
    cfg = cli.build_config({"m_grid": list(range(5, 101, 5)), "trials": 50, "seed": 0}, {})
    rows, meta = cli.run_phase(cfg)
    rate = {(r.program, r.m): r.rate for r in rows}
    grid = cfg.m_grid
    separated = [m for m in grid if rate[("weighted_optimal", m)] >= 0.9 and rate[("nuclear", m)] <= 0.1]
    nuc = [rate[("nuclear", m)] for m in grid]
    crossing = next((m for m, v in zip(grid, nuc) if v >= 0.5), math.inf)
    hi, lo = sdim.transition_bounds(meta["m_hat_nuclear"], 0.05, cfg.n**2)
    within = lo <= crossing <= hi
    curve = " ".join(f"{m}:{rate[('nuclear', m)]:.2f}/{rate[('weighted_optimal', m)]:.2f}" for m in grid)
    detail = (
        f"separating m={separated} nuclear 50%-crossing={crossing} allowed [{lo},{hi}] "
        f"(n^2 m_hat_nuc={100 * meta['m_hat_nuclear']:.1f}); m:nuc/wtd {curve}"
    )
    return bool(separated) and within, detail


def structural_suite() -> tuple[bool, str]:
    rng = np.random.default_rng(77)
    worst = dict(basis=0.0, factor=0.0, singular=0.0, split=0.0, adjoint=0.0, shrink=0.0)
    for seed in range(20):
        n = int(rng.integers(4, 12))
        r = int(rng.integers(1, n // 2 + 1))
        rp = int(rng.integers(r, n - r + 1))
        p = SubspacePrior(n, r, rp, rng.uniform(1, 89, r), rng.uniform(1, 89, r))
        inst = geometry.make_prior_instance(p, seed)
        gt, ut, vt = inst
        bp = geometry.build_basis_pair(gt, ut, vt, p)
        for b, tilde, cols in ((bp.B_L, ut, p.columns_u()), (bp.B_R, vt, p.columns_v())):
            rep = np.zeros((n, rp))
            rep[:r, :r] = np.diag(np.cos(cols))
            rep[r : 2 * r, :r] = -np.diag(np.sin(cols))
            rep[2 * r : r + rp, r:] = -np.eye(rp - r)
            worst["basis"] = max(worst["basis"], np.abs(b @ rep - tilde).max(), np.abs(b.T @ b - np.eye(n)).max())
        w = WeightVector(*rng.uniform(0.1, 3.0, 3))
        dec = weighting.decompose(w, bp, p)
        z, z2 = rng.standard_normal((2, n, n))
        hz = weighting.apply_h(w, ut, vt, z)
        worst["factor"] = max(worst["factor"], np.abs(dec.apply(z) - hz).max())
        direct = np.linalg.svd(weighting.apply_h(w, ut, vt, gt.matrix), compute_uv=False)[:r]
        formula = weighting.weighted_svd(gt, dec).singulars
        worst["singular"] = max(worst["singular"], np.abs(formula - direct).max() / direct.max())
        sp = weighting.support_projectors(dec)
        split = np.abs(sp.tangent(z) + sp.normal(z) - z).max() + abs(np.sum(sp.tangent(z) * sp.normal(z)))
        worst["split"] = max(worst["split"], split)
        adj = abs(np.sum(hz * z2) - np.sum(z * weighting.apply_h(w, ut, vt, z2)))
        worst["adjoint"] = max(worst["adjoint"], adj)
        g, a = rng.standard_normal(), abs(rng.standard_normal())
        brute = min((g - s) ** 2 for s in np.linspace(-a, a, 200_001))
        worst["shrink"] = max(worst["shrink"], abs(numerics.shrinkage_sq(g, a) - brute))
    tol = dict(basis=1e-9, factor=1e-8, singular=1e-8, split=1e-9, adjoint=1e-9, shrink=1e-8)
    ok = all(worst[k] <= tol[k] for k in tol)
    return ok, " ".join(f"{k}={worst[k]:.1e}<={tol[k]:.0e}" for k in tol)


CRITERIA = [
    (1, "strong-prior weights", strong_prior_weights),
    (2, "weak-prior weights", weak_prior_weights),
    (3, "equal-weight reduction", equal_weight_reduction),
    (4, "error band vs Monte Carlo", error_band),
    (5, "shrinkage table", shrinkage_table),
    (6, "Marchenko-Pastur", marchenko_pastur),
    (7, "phase-transition separation", phase_separation),
    (8, "structural identities", structural_suite),
]


def run(k: int) -> bool:
    _, name, fn = CRITERIA[k - 1]
    t0 = time.perf_counter()
    ok, detail = fn()
    return record(k, name, ok, detail, time.perf_counter() - t0)


@pytest.fixture(autouse=True)
def _threads(monkeypatch):
    monkeypatch.setenv("RECOVERY_THREADS", os.environ.get("RECOVERY_THREADS", str(os.cpu_count() or 1)))


@pytest.mark.slow
@pytest.mark.parametrize("k", [c[0] for c in CRITERIA], ids=[c[1].replace(" ", "_") for c in CRITERIA])
def test_acceptance(k):
    assert run(k), RESULTS[k]


if __name__ == "__main__":
    os.environ.setdefault("RECOVERY_THREADS", str(os.cpu_count() or 1))
    outcomes = [run(k) for k, _, _ in CRITERIA]
    print(f"{sum(outcomes)}/{len(outcomes)} criteria pass")
