"""Exception types shared across the package.

Argument validation raises plain ``ValueError``; the classes here mark
numerical failures that callers may want to distinguish (the CLI maps them
to exit codes).
"""

from __future__ import annotations


class NumericalError(RuntimeError):
    """Base class for numerical failures during estimation."""


class NotPositiveDefiniteError(NumericalError):
    """A matrix required to be positive definite was not."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap before converging.

    Carries the last iterate in ``fit`` so callers can inspect it.
    """

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class SingularEstimateError(NumericalError):
    """A precision estimate is singular where a log-determinant is needed."""


class EstimationError(NumericalError):
    """An estimation pipeline could not produce a valid estimate."""


class IngestionError(ValueError):
    """Input data could not be parsed; message names the offending cell."""
