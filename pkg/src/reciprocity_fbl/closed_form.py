"""Analytical rate lower bounds for uplink- and downlink-trained beamforming.

With MRT beamforming the post-beamforming SNR is ``gamma_eff * X`` where
``X ~ Gamma(n_b, 1)`` is the normalised channel gain. The expected capacity
(``phi_capacity_term``) and expected dispersion penalty (``psi_penalty_term``)
are evaluated by quadrature against the Gamma density; the alternating
binomial/log-moment sum and the Laplace form of the penalty are kept as
alternative paths.

Rates reported by :func:`rate_uplink` and :func:`rate_downlink` default to the
exact expectation of the per-realisation rate clamped at zero, the same
convention used by the Monte Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy.special import comb, gammaln, xlogy

from .channel_model import (
    SystemConfig,
    check_training_length,
    downlink_effective_snr,
    uplink_effective_snr,
)
from .errors import DomainError, InfeasibleConfigError, UnsupportedConfigurationError
from .finite_blocklength import RateBound, capacity, dispersion, zero_rate_snr
from .numerics import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    integrate,
    laplace_approx,
    q_inverse,
    shifted_log_moment,
)

RateMethod = Literal["expectation", "laplace"]

MAX_SERIES_ANTENNAS = 8
# Tight tolerances for the alternating sum: its terms cancel by up to ~1e4.
_SERIES_SETTINGS = QuadratureSettings(abs_tol=1e-300, rel_tol=1e-14, max_subdivisions=4000)


@dataclass(frozen=True)
class TrainingLengthChoice:
    t_tr_star: int
    rate_at_optimum: float


def gain_density(x, n_b: int):
    """Gamma(n_b, 1) density of the normalised channel gain ||h||^2."""
    x = np.asarray(x, dtype=float)
    return np.exp(xlogy(n_b - 1, x) - x - gammaln(n_b))


def _check_gamma(gamma_eff: float, n_b: int):
    if not (math.isfinite(gamma_eff) and gamma_eff >= 0):
        raise DomainError(f"gamma_eff must be finite and nonnegative, got {gamma_eff}")
    if int(n_b) != n_b or n_b < 1:
        raise DomainError(f"n_b must be a positive integer, got {n_b}")


# ---------------------------------------------------------------------------
# Expected capacity


def phi_capacity_term(
    gamma_eff: float,
    n_b: int,
    method: Literal["quadrature", "series"] = "quadrature",
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """E[log2(1 + gamma_eff X)] with X ~ Gamma(n_b, 1).

    ``method="series"`` evaluates the alternating binomial sum over
    log-moments; it cancels catastrophically for many antennas and is
    limited to ``n_b <= 8``.
    """
    _check_gamma(gamma_eff, n_b)
    if gamma_eff == 0:
        return 0.0
    if method == "series":
        return _phi_series(gamma_eff, int(n_b))
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    return integrate(lambda x: capacity(gamma_eff * x) * gain_density(x, n_b), 0.0, math.inf, settings)


def _phi_series(gamma_eff: float, n_b: int) -> float:
    if n_b > MAX_SERIES_ANTENNAS:
        raise UnsupportedConfigurationError(
            f"series path refuses n_b={n_b} > {MAX_SERIES_ANTENNAS}; use the quadrature path")
    inv = 1.0 / gamma_eff
    # exp(1/gamma) cancels against the exp(-1/gamma) inside each log-moment
    terms = [
        comb(n_b - 1, i, exact=True) * (-1) ** (n_b - 1 - i) * shifted_log_moment(i, inv, _SERIES_SETTINGS)
        for i in range(n_b)
    ]
    log_prefactor = -n_b * math.log(gamma_eff) - gammaln(n_b)
    return math.exp(log_prefactor) * math.fsum(terms) / math.log(2.0)


# ---------------------------------------------------------------------------
# Expected dispersion penalty


def psi_penalty_term(
    gamma_eff: float,
    n_b: int,
    T: int,
    epsilon: float,
    method: Optional[Literal["laplace", "quadrature"]] = None,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """E[sqrt(V(gamma_eff X)/T)] * Qinv(epsilon) with X ~ Gamma(n_b, 1).

    ``method=None`` picks the Laplace form for ``n_b >= 2`` and quadrature
    for a single antenna, where the Laplace form degenerates.
    """
    _check_gamma(gamma_eff, n_b)
    if int(T) != T or T < 1:
        raise DomainError(f"T must be a positive integer, got {T}")
    if method is None:
        method = "laplace" if n_b >= 2 else "quadrature"
    qinv = q_inverse(epsilon)
    if qinv == 0.0 or gamma_eff == 0:
        return 0.0

    if method == "laplace":
        if n_b < 2:
            raise UnsupportedConfigurationError(
                "the Laplace penalty needs n_b >= 2; use method='quadrature'")
        eta = n_b - 1
        # g is shifted by +1 so exp(eta*g(t0)) = 1; the exp(-eta) goes into the log prefactor
        integral = laplace_approx(
            eta,
            lambda t: math.log(t) - t + 1.0,
            lambda t: math.sqrt(dispersion(gamma_eff * t * eta)),
            t0=1.0,
            g_second=-1.0,
        )
        log_prefactor = (eta + 1) * math.log(eta) - eta - gammaln(eta + 1)
        return qinv / math.sqrt(T) * math.exp(log_prefactor) * integral
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    integral = integrate(
        lambda x: np.sqrt(dispersion(gamma_eff * x)) * gain_density(x, n_b), 0.0, math.inf, settings)
    return qinv / math.sqrt(T) * integral


# ---------------------------------------------------------------------------
# Clamped expected rate


def expected_rate(
    gamma_eff: float,
    n_b: int,
    T: int,
    epsilon: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """E[max(0, C(gamma_eff X) - sqrt(V(gamma_eff X)/T) Qinv(eps))].

    The clamp is active exactly below the zero-rate SNR, so the integral is
    taken from that point on and the integrand stays smooth.
    """
    _check_gamma(gamma_eff, n_b)
    if gamma_eff == 0:
        return 0.0
    qinv = q_inverse(epsilon)
    x0 = zero_rate_snr(T, epsilon) / gamma_eff
    if not math.isfinite(x0):
        # tiny SNR: no realisation clears the zero-rate point
        return 0.0
    scale = qinv / math.sqrt(T)

    def integrand(x):
        s = gamma_eff * x
        return (capacity(s) - scale * np.sqrt(dispersion(s))) * gain_density(x, n_b)

    return max(0.0, integrate(integrand, x0, math.inf, settings))


def clamped_rate(gamma_eff: float, cfg: SystemConfig, method: RateMethod = "expectation") -> float:
    """Per-channel-use rate at ``gamma_eff`` without any training prefactor."""
    if method == "expectation":
        return expected_rate(gamma_eff, cfg.n_b, cfg.T, cfg.epsilon)
    if method == "laplace":
        cap = phi_capacity_term(gamma_eff, cfg.n_b)
        return max(0.0, cap - psi_penalty_term(gamma_eff, cfg.n_b, cfg.T, cfg.epsilon))
    raise DomainError(f"unknown rate method {method!r}")


def _bound(gamma_eff: float, cfg: SystemConfig, method: RateMethod, prefactor: float) -> RateBound:
    cap = prefactor * phi_capacity_term(gamma_eff, cfg.n_b)
    rate = prefactor * clamped_rate(gamma_eff, cfg, method)
    return RateBound(capacity_term=cap, penalty_term=cap - rate, rate=rate)


def rate_uplink(cfg: SystemConfig, method: RateMethod = "expectation") -> RateBound:
    """Rate bound with uplink training and reciprocity (no training overhead)."""
    return _bound(uplink_effective_snr(cfg).value, cfg, method, 1.0)


def rate_downlink(cfg: SystemConfig, method: RateMethod = "expectation") -> RateBound:
    """Rate bound with ``cfg.t_tr`` downlink pilots, scaled by ``1 - t_tr/T``."""
    t_tr = check_training_length(cfg)
    return _bound(downlink_effective_snr(cfg).value, cfg, method, 1.0 - t_tr / cfg.T)


def downlink_rate_value(cfg: SystemConfig, method: RateMethod = "expectation") -> float:
    """``rate_downlink(cfg).rate`` without the separate capacity integral."""
    t_tr = check_training_length(cfg)
    return (1.0 - t_tr / cfg.T) * clamped_rate(downlink_effective_snr(cfg).value, cfg, method)


@lru_cache(maxsize=512)
def _scan(n_b: int, rho_b: float, T: int, epsilon: float, method: RateMethod) -> tuple:
    base = SystemConfig(n_b=n_b, rho_b=rho_b, T=T, epsilon=epsilon)
    return tuple(downlink_rate_value(base.replace(t_tr=t), method) for t in range(n_b, T))


def scan_training_lengths(cfg: SystemConfig, method: RateMethod = "expectation") -> np.ndarray:
    """Downlink rate for every integer t_tr in [n_b, T-1], in that order."""
    if cfg.n_b >= cfg.T:
        raise InfeasibleConfigError(f"no training length fits: n_b={cfg.n_b} >= T={cfg.T}")
    return np.array(_scan(cfg.n_b, float(cfg.rho_b), cfg.T, cfg.epsilon, method))


def optimize_training_length(cfg: SystemConfig, method: RateMethod = "expectation") -> TrainingLengthChoice:
    """Exhaustive integer scan; ties go to the shortest training length."""
    rates = scan_training_lengths(cfg, method)
    k = int(np.argmax(rates))  # argmax returns the first maximiser
    return TrainingLengthChoice(t_tr_star=cfg.n_b + k, rate_at_optimum=float(rates[k]))
