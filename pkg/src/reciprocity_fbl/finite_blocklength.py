"""Normal approximation of the maximal coding rate at finite blocklength.

``capacity`` and ``dispersion`` accept scalars or numpy arrays so they can be
used directly inside quadrature integrands and Monte Carlo loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .numerics import q_inverse

LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class RateBound:
    """Achievable rate in bits/channel-use, split into capacity and penalty.

    ``rate == capacity_term - penalty_term`` always holds.
    """

    capacity_term: float
    penalty_term: float
    rate: float


def _check_snr(gamma):
    if np.any(np.asarray(gamma) < 0):
        raise DomainError("SNR must be nonnegative")


def capacity(gamma):
    """Shannon capacity log2(1 + gamma)."""
    _check_snr(gamma)
    out = np.log1p(gamma) * LOG2E
    return float(out) if np.ndim(out) == 0 else out


def dispersion(gamma):
    """AWGN channel dispersion (log2 e)^2 (1 - (1+gamma)^-2)."""
    _check_snr(gamma)
    g = np.asarray(gamma, dtype=float)
    # 1 - (1+g)^-2 == g(2+g)/(1+g)^2, no cancellation near g = 0
    out = LOG2E**2 * g * (2.0 + g) / (1.0 + g) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _check_blocklength(T: int, epsilon: float):
    if int(T) != T or T < 1:
        raise DomainError(f"blocklength T must be a positive integer, got {T}")
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def rate_samples(gamma, T: int, epsilon: float):
    """Raw normal-approximation rate for an array of SNRs (not clamped)."""
    _check_blocklength(T, epsilon)
    g = np.asarray(gamma, dtype=float)
    return capacity(g) - np.sqrt(dispersion(g) / T) * q_inverse(epsilon)


def normal_approx_rate(T: int, epsilon: float, gamma: float) -> RateBound:
    _check_blocklength(T, epsilon)
    cap = capacity(float(gamma))
    penalty = math.sqrt(dispersion(float(gamma)) / T) * q_inverse(epsilon)
    return RateBound(capacity_term=cap, penalty_term=penalty, rate=cap - penalty)


def zero_rate_snr(T: int, epsilon: float) -> float:
    """Smallest SNR at which the normal-approximation rate is nonnegative.

    For epsilon < 1/2 the rate is negative on (0, s0) and positive beyond s0
    (it first decreases, then increases), so s0 is the unique positive root.
    Returns 0 when epsilon >= 1/2.
    """
    _check_blocklength(T, epsilon)
    c = q_inverse(epsilon) / math.sqrt(T)
    if c <= 0:
        return 0.0

    # nats: ln(1+s) - c sqrt(1 - (1+s)^-2)
    def f(s):
        return math.log1p(s) - c * math.sqrt(s * (2.0 + s)) / (1.0 + s)

    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
    # f turns upward where w sqrt(w^2-1) = c with w = 1+s; the root lies beyond
    w = math.sqrt(0.5 + math.sqrt(0.25 + c * c))
    lo = w - 1.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
