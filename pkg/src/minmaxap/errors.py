"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """A point and a set (or two points) disagree on the spatial dimension."""


class ProjectionError(RuntimeError):
    """A numeric projection failed to reach its tolerance.

    Attributes
    ----------
    iterate : the last point produced before giving up, or None.
    residual : the constraint violation / stationarity residual at that point.
    """

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    Carries the best iterate seen so far and the residual at the stop, so
    callers can inspect or report partial progress.
    """

    def __init__(self, message, iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations


class OracleBudgetError(RuntimeError):
    """A brute-force oracle ran out of its evaluation budget."""

    def __init__(self, message, best=None, evals=None):
        super().__init__(message)
        self.best = best
        self.evals = evals


class InfeasibleTargetError(ValueError):
    """The requested target state cannot be reached under the agent model."""
