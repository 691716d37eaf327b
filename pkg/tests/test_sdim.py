import math

import numpy as np
import pytest

from artifact import geometry, sdim, weighting
from artifact.errors import InvalidWeights
from artifact.geometry import PriorInstance, SubspacePrior
from artifact.numerics import MpParams, phi
from artifact.weighting import WeightVector

STRONG_PRIOR = SubspacePrior(10, 3, 3, [0.0196, 0.0156, 0.005], [0.0258, 0.0146, 0.0098])
STRONG_W = WeightVector(4.8808e-4, 0.0907, 0.1002)


def random_dims(rng):
    n = int(rng.integers(3, 30))
    r = int(rng.integers(1, n // 2 + 1))
    rp = int(rng.integers(r, n - r + 1))
    return n, r, rp


class TestRatios:
    @pytest.mark.parametrize("dims", [(10, 3, 3), (20, 5, 9), (7, 1, 6), (12, 4, 4), (9, 2, 3)])
    def test_alpha_sum(self, dims):
        a = sdim.alpha_ratios(*dims)
        total = a.a22 + 2 * a.a23 + 2 * a.a24 + a.a33 + 2 * a.a34 + a.a44
        assert total == pytest.approx(1.0, abs=1e-15)
        n, r, rp = dims
        assert a.a22 == r**2 / (n - r) ** 2 and a.a44 == (n - r - rp) ** 2 / (n - r) ** 2

    def test_aspect_ratios(self):
        assert sdim.aspect_ratios(20, 5, 9) == pytest.approx((4 / 5, 5 / 6, 4 / 6))
        assert sdim.aspect_ratios(10, 3, 3) == pytest.approx((0.0, 3 / 4, 0.0))


class TestPsiNuclear:
    @pytest.mark.parametrize("dims", [(10, 3, 3), (20, 5, 9), (6, 1, 2)])
    def test_zero_t_is_whole_space(self, dims):
        n, r, rp = dims
        a, b = rp - r, n - r - rp
        # t = 0: every block contributes its size times phi(0, .)
        direct = 2 * n * r - r * r
        for rows, cols in [(r, r), (r, a), (a, r), (r, b), (b, r), (a, a), (a, b), (b, a), (b, b)]:
            if rows and cols:
                direct += rows * cols * phi(0.0, MpParams.for_shape(rows, cols))
        assert sdim.psi_nuclear(0.0, n, r, rp) == pytest.approx(direct, rel=1e-12)
        assert direct == pytest.approx(n * n, rel=1e-9)

    def test_printed_support_constant(self):
        exact = sdim.psi_nuclear(1.0, 10, 3, 3)
        printed = sdim.psi_nuclear(1.0, 10, 3, 3, support_constant="printed")
        assert exact - printed == pytest.approx((2 * 10 * 3 - 9) - 27)

    def test_equal_weights_reduce_to_unweighted(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n, r, rp = random_dims(rng)
            t = float(rng.uniform(0.01, 5.0))
            p = SubspacePrior(n, r, rp, rng.uniform(0, 90, r), rng.uniform(0, 90, r))
            assert sdim.psi_weighted((t, t, t), p) == pytest.approx(sdim.psi_nuclear(t, n, r, rp), rel=1e-8)


class TestPsiWeighted:
    def test_equal_weights_cancel_at_45(self):
        p = SubspacePrior(8, 2, 3, [45, 45], [45, 45])
        terms = sdim.psi_weighted_terms((1.3, 1.3, 1.3), p)
        assert terms.correction == 0.0
        np.testing.assert_array_equal(terms.e22, 0.0)

    def test_rejects_zero_first_weight(self):
        with pytest.raises(InvalidWeights):
            sdim.psi_weighted((0.0, 1.0, 1.0), STRONG_PRIOR)

    def test_origin_is_whole_space(self):
        assert sdim.psi_weighted((0.0, 0.0, 0.0), STRONG_PRIOR) == pytest.approx(100.0, rel=1e-9)

    def test_support_terms_match_factorization(self):
        """Trigonometric and correction sums equal the squared blocks of the sign image."""
        rng = np.random.default_rng(4)
        for seed in range(10):
            n, r, rp = random_dims(rng)
            p = SubspacePrior(n, r, rp, rng.uniform(1, 89, r), rng.uniform(1, 89, r))
            inst = geometry.make_prior_instance(p, seed)
            v = rng.uniform(0.2, 3.0, 3)
            w = WeightVector(*v)
            dec = weighting.decompose(w, geometry.build_basis_pair(*inst, p), p)
            lead = np.zeros((n, n))
            lead[:r, :r] = np.eye(r)
            e = dec.left_triangular.T @ lead @ dec.right_triangular / w.w3
            terms = sdim.psi_weighted_terms(tuple(v), p)
            assert terms.trig == pytest.approx(np.sum(e[:r, :r] ** 2), rel=1e-10)
            assert terms.correction == pytest.approx(np.sum(e[:r, r:] ** 2) + np.sum(e[r:, :r] ** 2), rel=1e-9, abs=1e-12)
            np.testing.assert_allclose(np.abs(terms.e22), np.abs(np.diag(e[r : 2 * r, r : 2 * r])), rtol=1e-9, atol=1e-12)

    def test_block_gains_match_factorization(self):
        """Spectral-ball gains per block equal products of triangular diagonals over w3."""
        p = SubspacePrior(11, 2, 4, [70, 20], [50, 35])
        inst = geometry.make_prior_instance(p, 1)
        w = WeightVector(0.7, 1.9, 1.2)
        dec = weighting.decompose(w, geometry.build_basis_pair(*inst, p), p)
        left = np.diag(dec.left_triangular)[p.r :]
        right = np.diag(dec.right_triangular)[p.r :]
        gains = np.outer(left, right) / w.w3
        terms = sdim.psi_weighted_terms((w.w1, w.w2, w.w3), p)
        np.testing.assert_allclose(terms.gains, gains, rtol=1e-12)

    def test_sorted_pairing_agrees_when_orders_match(self):
        p = SubspacePrior(9, 3, 3, [80, 70, 60], [85, 75, 65])
        v = (0.4, 1.1, 0.9)
        terms = sdim.psi_weighted_terms(v, p)
        assert np.all(np.diff(np.abs(terms.e22)) <= 0) and np.all(np.diff(np.diag(terms.gains[:3, :3])) <= 0)
        assert sdim.psi_weighted(v, p, pairing="sorted") == pytest.approx(sdim.psi_weighted(v, p), rel=1e-12)

    def test_sorted_pairing_never_lower(self):
        # co-sorting the two threshold parts maximizes the convex phi sum
        p = SubspacePrior(9, 3, 3, [60, 30, 10], [65, 35, 12])
        for v in [(0.4, 1.1, 0.9), (2.0, 1.1, 0.9), (1.5, 0.5, 1.0)]:
            assert sdim.psi_weighted(v, p, pairing="sorted") >= sdim.psi_weighted(v, p) - 1e-12

    def test_reported_strong_weights_beat_unweighted(self):
        best = sdim.weighted_threshold(STRONG_W, STRONG_PRIOR)
        assert best.m_hat <= sdim.nuclear_threshold(10, 3, 3).m_hat


class TestThresholds:
    def test_nuclear_in_unit_interval(self):
        rep = sdim.nuclear_threshold(10, 3, 3)
        assert 0 < rep.m_hat < 1
        assert rep.error_lower == pytest.approx(max(0.0, rep.m_hat - 2 / (10 * math.sqrt(30))))
        assert 0 <= rep.error_lower <= rep.m_hat <= 1 + 1e-9

    def test_zero_rank(self):
        assert sdim.nuclear_threshold(10, 0, 0).m_hat == 0.0

    def test_weighted_unit_equals_nuclear(self):
        p = SubspacePrior(10, 3, 4, [20, 50, 80], [10, 40, 70])
        a = sdim.weighted_threshold(WeightVector(1, 1, 1), p)
        b = sdim.nuclear_threshold(10, 3, 4)
        assert a.m_hat == pytest.approx(b.m_hat, abs=1e-8)

    @pytest.mark.parametrize("c", [0.1, 10.0])
    def test_scale_invariance(self, c):
        p = SubspacePrior(10, 3, 3, [20, 50, 80], [10, 40, 70])
        w = WeightVector(0.5, 1.2, 0.8)
        assert sdim.weighted_threshold(w.scaled(c), p).m_hat == pytest.approx(
            sdim.weighted_threshold(w, p).m_hat, abs=1e-8
        )

    def test_error_band_formula(self):
        p = SubspacePrior(10, 3, 3, [60, 40, 20], [70, 30, 25])
        rep = sdim.weighted_threshold(WeightVector(1, 1, 1), p)
        c = min(math.sin(math.radians(60)), math.cos(math.radians(20))) * min(
            math.sin(math.radians(70)), math.cos(math.radians(25))
        )
        assert sdim.angle_constant(p) == pytest.approx(c)
        assert rep.error_band == pytest.approx(2 / (10 * math.sqrt(30) * c))
        assert rep.error_lower == pytest.approx(max(0.0, rep.m_hat - rep.error_band))

    def test_report_carries_ratios(self):
        rep = sdim.nuclear_threshold(20, 5, 9)
        assert rep.alpha == sdim.alpha_ratios(20, 5, 9)
        assert rep.s_ratios == sdim.aspect_ratios(20, 5, 9)

    def test_clamp_recorded(self):
        p = SubspacePrior(6, 1, 1, [0.0], [10.0])
        assert sdim.weighted_threshold(WeightVector(1, 1, 1), p).clamped

    def test_bracket_value(self):
        n = 10
        expect = n * (1 + (n * n + 1) ** 0.25 / math.sqrt(math.sqrt(n * n + 1) - n))
        assert sdim.scale_bracket(n) == pytest.approx(expect)


class TestTransitionBounds:
    def test_arithmetic(self):
        hi, lo = sdim.transition_bounds(0.5, 0.05, 100)
        width = math.sqrt(8 * math.log(80) * 100)
        assert hi == math.ceil(50 + width) and lo == math.floor(50 - width)

    def test_eta_near_one(self):
        hi, lo = sdim.transition_bounds(0.5, 1 - 1e-12, 100)
        width = math.sqrt(8 * math.log(4) * 100)
        assert hi == math.ceil(50 + width)

    def test_invalid_eta(self):
        with pytest.raises(ValueError):
            sdim.transition_bounds(0.5, 1.0, 100)


class TestMonteCarlo:
    def test_full_rank_cone_is_a_halfspace(self):
        # full rank: the subdifferential is a single point, so delta = n^2 - 1/2
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 5)))
        truth = geometry.GroundTruth(q, np.ones(5), q)
        est = sdim.mc_statistical_dimension("nuclear", PriorInstance(truth, q, q), trials=2000, seed=0)
        assert abs(est.mean - (25 - 0.5) / 25) <= 3 * est.stderr

    def test_weighted_unit_matches_nuclear(self):
        p = SubspacePrior(8, 2, 2, [60, 20], [50, 30])
        inst = geometry.make_prior_instance(p, seed=3)
        nuc = sdim.mc_statistical_dimension("nuclear", inst, trials=200, seed=11)
        wtd = sdim.mc_statistical_dimension(WeightVector(1, 1, 1), inst, trials=200, seed=11)
        joint = math.hypot(nuc.stderr, wtd.stderr)
        assert abs(nuc.mean - wtd.mean) <= 3 * joint
        assert wtd.discarded == 0

    def test_single_trial_has_undefined_stderr(self):
        p = SubspacePrior(6, 1, 1, [30], [30])
        est = sdim.mc_statistical_dimension("nuclear", geometry.make_prior_instance(p, 0), trials=1, seed=0)
        assert math.isnan(est.stderr)

    def test_closed_form_is_an_upper_estimate(self):
        """The closed form never falls below the simulated dimension (beyond noise)."""
        rep = sdim.nuclear_threshold(10, 3, 3)
        p = SubspacePrior(10, 3, 3, [30, 20, 10], [30, 20, 10])
        est = sdim.mc_statistical_dimension("nuclear", geometry.make_prior_instance(p, 0), trials=300, seed=5)
        assert est.mean <= rep.m_hat + 3 * est.stderr

    @pytest.mark.xfail(strict=True, reason="block-split spectral ball makes the closed form ~0.19 above delta at n=10")
    def test_nuclear_within_error_band(self):
        rep = sdim.nuclear_threshold(10, 3, 3)
        p = SubspacePrior(10, 3, 3, [30, 20, 10], [30, 20, 10])
        est = sdim.mc_statistical_dimension("nuclear", geometry.make_prior_instance(p, 0), trials=300, seed=5)
        assert rep.m_hat - 2 / (10 * math.sqrt(30)) - 3 * est.stderr <= est.mean
