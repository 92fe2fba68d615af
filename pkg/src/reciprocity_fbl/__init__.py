"""Finite-blocklength rate bounds for uplink (reciprocity) vs downlink (pilot) channel training."""

from .channel_model import (
    EffectiveSnr,
    SystemConfig,
    TrainingStats,
    db_to_linear,
    downlink_effective_snr,
    downlink_training_stats,
    linear_to_db,
    uplink_effective_snr,
)
from .closed_form import (
    TrainingLengthChoice,
    optimize_training_length,
    phi_capacity_term,
    psi_penalty_term,
    rate_downlink,
    rate_uplink,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleConfigError,
    InvalidTrainingLengthError,
    UnsupportedConfigurationError,
)
from .finite_blocklength import RateBound, capacity, dispersion, normal_approx_rate
from .monte_carlo import (
    McEstimate,
    estimate_rate_downlink_pipeline,
    estimate_rate_downlink_statistical,
    estimate_rate_uplink,
)
from .numerics import QuadratureSettings, integrate, q_function, q_inverse
from .threshold import PhiStarResult, phi_star_approx, phi_star_exact

__version__ = "0.1.0"
