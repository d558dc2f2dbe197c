"""Exception types raised across the package."""


class TVFrechetError(Exception):
    """Base class for all package errors."""


class InvalidInput(TVFrechetError, ValueError):
    """Input violates a precondition (shape, range, length)."""


class NotPositiveDefinite(InvalidInput):
    """A matrix has an eigenvalue at or below the positivity floor."""


class ConvergenceFailure(TVFrechetError, RuntimeError):
    """An iterative routine hit its iteration cap.

    The last iterate is kept on ``last`` so callers can still use it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
