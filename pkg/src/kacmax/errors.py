"""Exception hierarchy shared by every module."""


class KacmaxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(KacmaxError, ValueError):
    """Non-finite values, malformed partitions, empty inputs and the like."""


class DomainError(KacmaxError, ValueError):
    """A parameter lies outside the domain where the quantity is defined."""


class DimensionError(KacmaxError, ValueError):
    """Matrix shapes do not match the operation."""


class SizeError(KacmaxError, ValueError):
    """The request exceeds a declared cost cap."""


class ConvergenceError(KacmaxError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    The best iterate and its residuals are kept so the failure can be
    inspected or reproduced.
    """

    def __init__(self, message, roots=None, residuals=None, iterations=None):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals
        self.iterations = iterations


class SamplerError(KacmaxError, RuntimeError):
    """A random sampler failed (rejection cap hit, root solve failed)."""


class CrossValidationError(KacmaxError, RuntimeError):
    """Two independent evaluations of the same quantity disagree."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values
