import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reciprocity_fbl.channel_model import SystemConfig, db_to_linear, downlink_effective_snr, uplink_effective_snr
from reciprocity_fbl.closed_form import clamped_rate, downlink_rate_value, optimize_training_length
from reciprocity_fbl.errors import DomainError
from reciprocity_fbl.threshold import (
    kappa_value,
    log_rate_gap,
    phi_star_approx,
    phi_star_exact,
    phi_star_formula,
)


def cfg(n_b=10, rho_db=10.0, T=200, eps=1e-5):
    return SystemConfig(n_b=n_b, rho_b=db_to_linear(rho_db), T=T, epsilon=eps)


def gap(c, phi, t_tr):
    g = uplink_effective_snr(c.replace(phi=phi)).value
    return clamped_rate(g, c) - downlink_rate_value(c.replace(t_tr=t_tr))


class TestFormula:
    def test_kappa_one_gives_zero(self):
        assert phi_star_formula(10.0, 5, 1.0) == 0.0
        assert kappa_value(3.0, 5, 200, 200) == 1.0

    def test_solves_jensen_equality(self):
        # the formula zeroes the Jensen-bound gap it is derived from
        c = cfg()
        t = 30
        gamma_d = downlink_effective_snr(c.replace(t_tr=t)).value
        phi = phi_star_formula(c.rho_b, c.n_b, kappa_value(gamma_d, c.n_b, c.T, t))
        assert 0 < phi < 1
        assert log_rate_gap(c, phi, t) == pytest.approx(0.0, abs=1e-12)

    def test_requires_power(self):
        with pytest.raises(DomainError):
            phi_star_formula(0.0, 5, 2.0)

    def test_spot_value(self):
        r = phi_star_approx(cfg(), t_tr=20)
        gamma_d = downlink_effective_snr(cfg().replace(t_tr=20)).value
        kappa = (1 + gamma_d * 10) ** (180 / 200)
        rho = 10.0
        assert r.kappa == pytest.approx(kappa, rel=1e-14)
        assert r.phi_star == pytest.approx((rho + 1) * (kappa - 1) / (rho * (10 + kappa - 1)), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 16), st.floats(1e-3, 1e4), st.integers(0, 300), st.integers(1, 300))
    def test_raw_value_never_exceeds_one(self, n_b, rho, extra, rest):
        # gamma_d < rho_b and the exponent is at most one, so kappa < 1 + rho_b n_b
        c = SystemConfig(n_b=n_b, rho_b=rho, T=n_b + extra + rest, epsilon=1e-5)
        r = phi_star_approx(c, t_tr=n_b + extra)
        assert 0 <= r.phi_star < 1
        assert not r.uplink_never_wins_by_approx


class TestApproxVsExact:
    @pytest.mark.parametrize("rho_db", [5.0, 10.0])
    @pytest.mark.parametrize("T", [100, 400, 700, 1000])
    def test_close(self, rho_db, T):
        c = cfg(rho_db=rho_db, T=T)
        assert abs(phi_star_approx(c).phi_star - phi_star_exact(c).phi_star) <= 0.1

    def test_increases_with_blocklength(self):
        assert phi_star_approx(cfg(T=800)).phi_star > phi_star_approx(cfg(T=200)).phi_star
        assert phi_star_exact(cfg(T=800)).phi_star > phi_star_exact(cfg(T=200)).phi_star

    def test_gap_shrinks_with_power(self):
        def g(rho_db):
            c = cfg(rho_db=rho_db, T=500)
            return abs(phi_star_approx(c).phi_star - phi_star_exact(c).phi_star)

        assert g(20.0) < g(5.0)


class TestExact:
    def test_zero_downlink_rate(self):
        r = phi_star_exact(cfg(), t_tr=200)
        assert r.phi_star == 0.0
        assert r.outcome == "uplink_always_wins"

    def test_more_antennas_lower_threshold(self):
        a = phi_star_exact(cfg(n_b=5, eps=1e-9))
        b = phi_star_exact(cfg(n_b=10, eps=1e-9))
        assert a.outcome == b.outcome == "crossing"
        assert b.phi_star < a.phi_star

    def test_root(self):
        c = cfg()
        r = phi_star_exact(c, tol=1e-9)
        assert r.t_tr_star == optimize_training_length(c).t_tr_star
        assert r.residual <= 1e-9
        assert abs(gap(c, r.phi_star, r.t_tr_star)) <= 1e-9
        assert gap(c, r.phi_star + 1e-3, r.t_tr_star) > 0
        assert gap(c, r.phi_star - 1e-3, r.t_tr_star) < 0

    def test_gap_strictly_increasing_in_phi(self):
        c = cfg(n_b=5, rho_db=0.0)
        t = optimize_training_length(c).t_tr_star
        values = [gap(c, p, t) for p in np.linspace(0.05, 1.0, 20)]
        assert all(x < y for x, y in zip(values, values[1:]))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 12), st.floats(0.1, 1000), st.integers(0, 100), st.sampled_from([1e-9, 1e-5, 0.1]))
    def test_perfect_reciprocity_beats_downlink(self, n_b, rho, extra, eps):
        # at phi=1 uplink sees rho_b > gamma_d without pilot overhead, so a crossing always exists
        c = SystemConfig(n_b=n_b, rho_b=rho, T=n_b + extra + 50, epsilon=eps)
        t = n_b + extra
        assert gap(c, 1.0, t) > 0
        assert phi_star_exact(c, t_tr=t).outcome != "downlink_always_wins"

    @pytest.mark.parametrize("tol", [0.0, -1e-9])
    def test_tolerance_domain(self, tol):
        with pytest.raises(DomainError):
            phi_star_exact(cfg(), tol=tol)
