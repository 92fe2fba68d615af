"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class ReciprocityError(Exception):
    """Base class for all library errors."""


class DomainError(ReciprocityError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidTrainingLengthError(DomainError):
    """Downlink training needs n_b <= t_tr <= T."""


class InfeasibleConfigError(DomainError):
    """No feasible training length exists (n_b >= T)."""


class UnsupportedConfigurationError(DomainError):
    """The requested evaluation path does not support this configuration."""


class ConvergenceError(ReciprocityError, ArithmeticError):
    """A numerical procedure stopped before reaching its tolerance.

    ``estimate`` and ``error_bound`` carry the best result available when
    the procedure gave up.
    """

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound
