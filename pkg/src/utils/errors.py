# src/utils/errors.py
"""Exception hierarchy for the solver, the simulator and the CLI."""

from typing import Any, Optional

from src.config.constants import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_FAILURE


class HiddenTargetError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HiddenTargetError):
    """Invalid configuration, unknown preset, missing file or empty grid."""


class NumericalError(HiddenTargetError):
    """A computation could not meet its accuracy or validity contract."""


class NonPositiveSigma(NumericalError):
    """The transformed diffusion coefficient is not positive on the truncation."""


class QuadratureFailure(NumericalError):
    """An integral did not converge to the requested tolerance."""


class DegenerateInterval(NumericalError):
    """The scale increment over an interval is below tolerance."""


class SingularDenominator(NumericalError):
    """A surface ODE was evaluated on the diagonal; use the inverse equation."""


class StepFailure(NumericalError):
    """The adaptive ODE stepper could not advance."""


class NotConverged(NumericalError):
    """The diagonal-start schedule ran out before the sweeps settled."""

    def __init__(self, message: str, node: Optional[float] = None, residual: Optional[float] = None):
        super().__init__(message)
        self.node = node
        self.residual = residual


class MonotonicityViolation(NumericalError):
    """A solved surface breaks a monotonicity or diagonal invariant."""

    def __init__(self, message: str, cell: Optional[tuple] = None):
        super().__init__(message)
        self.cell = cell


class NoRootInTruncation(NumericalError):
    """A boundary map has no root inside the truncated domain."""


class RegionMismatch(NumericalError):
    """A point was handed to the value formula of a region it is not in."""


class UnsupportedCost(NumericalError):
    """The requested closed form needs a separable cost."""


class ExcessiveCensoring(NumericalError):
    """Too many simulated paths reached the horizon; the report is attached."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code (2 for config/usage, 3 for numerics)."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG_ERROR
    return EXIT_NUMERICAL_FAILURE
