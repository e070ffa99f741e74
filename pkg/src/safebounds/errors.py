"""Exception hierarchy shared by all safebounds modules."""


class SafeBoundsError(Exception):
    """Base class for every error raised by this package."""


class EmptyIntersectionError(SafeBoundsError, ValueError):
    """A query region overlaps the grid only on a set of zero measure."""


class InfeasibleError(SafeBoundsError, ValueError):
    """An interval polytope {lo <= t <= hi, sum(t) = 1} is empty."""


class AbstractionError(SafeBoundsError):
    """An abstraction failed its build-time consistency checks."""


class DegeneracyError(SafeBoundsError):
    """The simplex solver hit a numerical breakdown."""


class NonConvergenceError(SafeBoundsError):
    """An iterative procedure hit its iteration cap.

    The best iterate found so far is kept on ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnsupportedDimensionError(SafeBoundsError, ValueError):
    """The operation is only defined for a different state dimension."""
