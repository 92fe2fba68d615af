import math

import numpy as np
import pytest
from scipy import stats as sp_stats

from reciprocity_fbl.channel_model import SystemConfig, downlink_effective_snr, downlink_training_stats
from reciprocity_fbl.errors import DomainError
from reciprocity_fbl.monte_carlo import (
    estimate_expected_capacity,
    estimate_rate_downlink_pipeline,
    estimate_rate_downlink_statistical,
    estimate_rate_uplink,
    pilot_matrix,
    sample_block,
    sample_gains,
    simulate_downlink_training,
    stream_rng,
)


def cfg(**kw):
    base = dict(n_b=5, rho_b=10.0, T=200, epsilon=1e-9, phi=1.0)
    base.update(kw)
    return SystemConfig(**base)


class TestSampleBlock:
    def test_perfect_reciprocity(self):
        b = sample_block(cfg(phi=1.0), stream_rng(1))
        assert np.array_equal(b.h_d, b.h_u)

    def test_no_reciprocity(self):
        b = sample_block(cfg(phi=0.0), stream_rng(1))
        assert np.array_equal(b.h_d, b.e)
        assert not np.allclose(b.h_d, b.h_u)

    def test_mean_gain(self):
        gains = sample_gains(4, 10**6, seed=11)
        assert gains.mean() == pytest.approx(4.0, abs=0.01)

    def test_block_gain_matches_norm(self):
        b = sample_block(cfg(n_b=3), stream_rng(2))
        assert b.gain_u == pytest.approx(np.linalg.norm(b.h_u) ** 2)

    @pytest.mark.parametrize("n_b", [1, 2, 5, 10])
    def test_gain_distribution(self, n_b):
        gains = sample_gains(n_b, 10**5, seed=5)
        assert sp_stats.kstest(gains, sp_stats.gamma(n_b).cdf).pvalue > 0.01

    def test_cross_correlation_vanishes(self):
        rng = stream_rng(9)
        blocks = [sample_block(cfg(n_b=2, phi=0.0), rng) for _ in range(20000)]
        hu = np.concatenate([b.h_u for b in blocks])
        hd = np.concatenate([b.h_d for b in blocks])
        assert abs(np.mean(hu * hd.conj())) <= 3 / math.sqrt(hu.size)


class TestUplinkEstimator:
    def test_zero_reciprocity(self):
        assert estimate_rate_uplink(cfg(phi=0.0), 10**4, seed=1).mean == 0.0

    def test_median_error_reduces_to_capacity(self):
        c = cfg(phi=0.7, epsilon=0.5)
        gamma = 0.7 * 10 / (0.3 * 10 + 1)
        a = estimate_rate_uplink(c, 10**5, seed=4)
        b = estimate_expected_capacity(gamma, c.n_b, 10**5, seed=4)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)

    def test_deterministic(self):
        assert estimate_rate_uplink(cfg(), 10**5, seed=3) == estimate_rate_uplink(cfg(), 10**5, seed=3)

    def test_seed_changes_stream(self):
        assert estimate_rate_uplink(cfg(), 10**4, seed=3).mean != estimate_rate_uplink(cfg(), 10**4, seed=4).mean

    def test_worker_count_irrelevant(self):
        one = estimate_rate_uplink(cfg(phi=0.9), 300000, seed=8, workers=1)
        three = estimate_rate_uplink(cfg(phi=0.9), 300000, seed=8, workers=3)
        assert one == three

    def test_std_error_scaling(self):
        a = estimate_rate_uplink(cfg(phi=0.9), 50000, seed=2).std_error
        b = estimate_rate_uplink(cfg(phi=0.9), 200000, seed=2).std_error
        assert b / a == pytest.approx(0.5, rel=0.2)

    def test_sample_floor(self):
        with pytest.raises(DomainError):
            estimate_rate_uplink(cfg(), 99, seed=1)


class TestDownlinkStatistical:
    def test_full_block_training(self):
        assert estimate_rate_downlink_statistical(cfg(t_tr=200), 10**4, seed=1).mean == 0.0

    def test_equivalent_to_scaled_uplink(self):
        # same draws scaled by var_estimate: a downlink config is an uplink config at SNR gamma_d
        c = cfg(t_tr=12, rho_b=50.0)
        g = downlink_effective_snr(c).value
        down = estimate_rate_downlink_statistical(c, 10**5, seed=6)
        up = estimate_rate_uplink(cfg(rho_b=g, phi=1.0), 10**5, seed=6)
        assert down.mean == pytest.approx((1 - 12 / 200) * up.mean, rel=1e-9)


class TestPipeline:
    @pytest.mark.parametrize("n_b,t_tr", [(1, 1), (4, 4), (4, 9), (8, 16)])
    def test_pilots_orthonormal(self, n_b, t_tr):
        s = pilot_matrix(n_b, t_tr)
        np.testing.assert_allclose(s @ s.conj().T, np.eye(n_b), atol=1e-13)

    def test_short_pilots_rejected(self):
        with pytest.raises(DomainError):
            pilot_matrix(4, 3)

    def test_estimate_variance(self):
        c = cfg(n_b=4, t_tr=6, rho_b=2.0)
        s = downlink_training_stats(c)
        _, h_hat = simulate_downlink_training(c, 10**6, stream_rng(12))
        assert np.mean(np.abs(h_hat) ** 2) == pytest.approx(s.var_estimate, rel=0.01)

    def test_error_orthogonal_to_estimate(self):
        c = cfg(n_b=4, t_tr=6, rho_b=2.0)
        h, h_hat = simulate_downlink_training(c, 200000, stream_rng(13))
        err = (h - h_hat).ravel()
        est = h_hat.ravel()
        corr = np.mean(est * err.conj()) / math.sqrt(np.mean(np.abs(est) ** 2) * np.mean(np.abs(err) ** 2))
        assert abs(corr) <= 3 / math.sqrt(est.size)
        assert np.mean(np.abs(err) ** 2) == pytest.approx(downlink_training_stats(c).var_error, rel=0.02)

    def test_noiseless_training_recovers_channel(self):
        c = cfg(n_b=3, t_tr=3, rho_b=1e10)
        h, h_hat = simulate_downlink_training(c, 1000, stream_rng(14))
        assert np.max(np.abs(h - h_hat)) < 1e-3

    def test_agrees_with_statistical_estimator(self):
        c = cfg(n_b=4, t_tr=8, rho_b=10.0, epsilon=1e-5)
        a = estimate_rate_downlink_statistical(c, 200000, seed=1)
        b = estimate_rate_downlink_pipeline(c, 200000, seed=2)
        assert abs(a.mean - b.mean) <= 3 * math.hypot(a.std_error, b.std_error)

    def test_deterministic(self):
        c = cfg(n_b=2, t_tr=4)
        assert estimate_rate_downlink_pipeline(c, 5000, seed=1) == estimate_rate_downlink_pipeline(c, 5000, seed=1)
