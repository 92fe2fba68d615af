"""Scenario parameters, reciprocity model and MMSE training statistics.

Noise power is normalised to one, so every quantity depends on the transmit
power only through the average SNR ``rho_b``. All values are linear scale.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Literal, Optional

from .errors import DomainError, InvalidTrainingLengthError

SnrKind = Literal["uplink_reciprocity", "downlink_mmse"]


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """One MISO downlink scenario.

    n_b      -- transmit antennas at the base station
    rho_b    -- average SNR P_b / sigma_u^2 (linear)
    T        -- blocklength in channel uses
    epsilon  -- target decoding error probability
    phi      -- channel reciprocity coefficient in [0, 1]
    t_tr     -- downlink training length in symbol periods (None if unused)
    """

    n_b: int
    rho_b: float
    T: int
    epsilon: float
    phi: float = 1.0
    t_tr: Optional[int] = None

    def __post_init__(self):
        if int(self.n_b) != self.n_b or self.n_b < 1:
            raise DomainError(f"n_b must be a positive integer, got {self.n_b}")
        if not (math.isfinite(self.rho_b) and self.rho_b >= 0):
            raise DomainError(f"rho_b must be finite and nonnegative, got {self.rho_b}")
        if int(self.T) != self.T or self.T < 1:
            raise DomainError(f"T must be a positive integer, got {self.T}")
        if not (0.0 < self.epsilon < 1.0):
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not (0.0 <= self.phi <= 1.0):
            raise DomainError(f"phi must lie in [0, 1], got {self.phi}")
        if self.t_tr is not None and (int(self.t_tr) != self.t_tr or self.t_tr < 1):
            raise DomainError(f"t_tr must be a positive integer, got {self.t_tr}")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TrainingStats:
    lam: float
    var_estimate: float
    var_error: float


@dataclass(frozen=True)
class EffectiveSnr:
    value: float
    kind: SnrKind

    def __float__(self):
        return self.value


def uplink_effective_snr(cfg: SystemConfig) -> EffectiveSnr:
    """SNR per unit channel gain with reciprocity mismatch treated as noise."""
    value = cfg.rho_b * cfg.phi / ((1.0 - cfg.phi) * cfg.rho_b + 1.0)
    return EffectiveSnr(value, "uplink_reciprocity")


def check_training_length(cfg: SystemConfig) -> int:
    if cfg.t_tr is None:
        raise InvalidTrainingLengthError("downlink training length t_tr is not set")
    if cfg.t_tr < cfg.n_b:
        raise InvalidTrainingLengthError(
            f"t_tr={cfg.t_tr} is shorter than n_b={cfg.n_b}; the channel cannot be estimated")
    if cfg.t_tr > cfg.T:
        raise InvalidTrainingLengthError(f"t_tr={cfg.t_tr} exceeds the blocklength T={cfg.T}")
    return int(cfg.t_tr)


def downlink_training_stats(cfg: SystemConfig) -> TrainingStats:
    t_tr = check_training_length(cfg)
    lam = t_tr * cfg.rho_b / cfg.n_b
    return TrainingStats(lam=lam, var_estimate=lam / (lam + 1.0), var_error=1.0 / (lam + 1.0))


def downlink_effective_snr(cfg: SystemConfig) -> EffectiveSnr:
    stats = downlink_training_stats(cfg)
    value = cfg.rho_b * stats.var_estimate / (cfg.rho_b * stats.var_error + 1.0)
    return EffectiveSnr(value, "downlink_mmse")
