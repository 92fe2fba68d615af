"""Minimum reciprocity coefficient at which uplink training matches downlink training.

Two routes are provided: the closed-form approximation that drops the
dispersion penalty and replaces expectations by their Jensen upper bound,
and an exact bisection on ``R_u(phi) - R_d`` using the full rate bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

from .channel_model import SystemConfig, downlink_effective_snr, uplink_effective_snr
from .closed_form import RateMethod, clamped_rate, downlink_rate_value, optimize_training_length
from .errors import ConvergenceError, DomainError

Outcome = Literal["crossing", "uplink_always_wins", "downlink_always_wins"]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PhiStarResult:
    phi_star: float
    method: Literal["approximation", "bisection"]
    t_tr_star: int
    kappa: Optional[float] = None
    residual: Optional[float] = None
    # approximation only: the raw value exceeded 1 and was capped
    uplink_never_wins_by_approx: bool = False
    outcome: Outcome = "crossing"


def kappa_value(gamma_d: float, n_b: int, T: int, t_tr: int) -> float:
    """(1 + gamma_d n_b) ** ((T - t_tr) / T)."""
    return (1.0 + gamma_d * n_b) ** ((T - t_tr) / T)


def phi_star_formula(rho_b: float, n_b: int, kappa: float) -> float:
    """Reciprocity at which log2(1 + gamma_u n_b) equals log2(kappa), uncapped."""
    if not rho_b > 0:
        raise DomainError("rho_b must be positive")
    return (rho_b + 1.0) * (kappa - 1.0) / (rho_b * (n_b + kappa - 1.0))


def _training_length(cfg: SystemConfig, t_tr: Optional[int], method: RateMethod) -> int:
    if t_tr is not None:
        return int(t_tr)
    return optimize_training_length(cfg, method).t_tr_star


def phi_star_approx(
    cfg: SystemConfig,
    t_tr: Optional[int] = None,
    method: RateMethod = "expectation",
) -> PhiStarResult:
    """Closed-form approximation of phi*; ``cfg.phi`` and ``cfg.t_tr`` are ignored.

    ``t_tr`` defaults to the rate-maximising downlink training length.
    """
    t_star = _training_length(cfg, t_tr, method)
    gamma_d = downlink_effective_snr(cfg.replace(t_tr=t_star)).value
    kappa = kappa_value(gamma_d, cfg.n_b, cfg.T, t_star)
    raw = phi_star_formula(cfg.rho_b, cfg.n_b, kappa)
    return PhiStarResult(
        phi_star=min(max(raw, 0.0), 1.0),
        method="approximation",
        t_tr_star=t_star,
        kappa=kappa,
        uplink_never_wins_by_approx=raw > 1.0,
    )


def phi_star_exact(
    cfg: SystemConfig,
    tol: float = DEFAULT_TOL,
    t_tr: Optional[int] = None,
    method: RateMethod = "expectation",
    max_iter: int = 200,
) -> PhiStarResult:
    """Bisection for R_u(phi) = R_d on phi in [0, 1].

    R_u is strictly increasing in phi and R_d does not depend on it, so the
    crossing is unique when it exists. ``residual`` is |R_u - R_d| at the
    returned point.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    t_star = _training_length(cfg, t_tr, method)
    r_down = downlink_rate_value(cfg.replace(t_tr=t_star), method)

    def f(phi: float) -> float:
        gamma_u = uplink_effective_snr(cfg.replace(phi=phi)).value
        return clamped_rate(gamma_u, cfg, method) - r_down

    def result(phi, residual, outcome):
        return PhiStarResult(phi_star=phi, method="bisection", t_tr_star=t_star,
                             residual=residual, outcome=outcome)

    if r_down <= 0.0:
        # R_u(0) = 0 already matches a zero downlink rate
        return result(0.0, 0.0, "uplink_always_wins")
    f_hi = f(1.0)
    if f_hi < -tol:
        return result(1.0, abs(f_hi), "downlink_always_wins")
    if f_hi <= tol:
        return result(1.0, abs(f_hi), "crossing")

    lo, hi = 0.0, 1.0
    best_phi, best_res = 1.0, abs(f_hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        value = f(mid)
        if abs(value) < best_res:
            best_phi, best_res = mid, abs(value)
        if abs(value) <= tol:
            return result(mid, abs(value), "crossing")
        if value < 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("bisection for phi* did not reach tolerance", best_phi, best_res)


def log_rate_gap(cfg: SystemConfig, phi: float, t_tr: int) -> float:
    """Jensen-bound gap log2(1 + gamma_u n_b) - (1 - t_tr/T) log2(1 + gamma_d n_b)."""
    gamma_u = uplink_effective_snr(cfg.replace(phi=phi)).value
    gamma_d = downlink_effective_snr(cfg.replace(t_tr=t_tr)).value
    return math.log2(1.0 + gamma_u * cfg.n_b) - (1.0 - t_tr / cfg.T) * math.log2(1.0 + gamma_d * cfg.n_b)
