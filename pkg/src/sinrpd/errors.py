"""Exception and warning types raised across the package."""


class RangeError(ValueError):
    """A parameter lies outside its admissible range.

    The offending field name is kept in ``field`` so callers (and the CLI)
    can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DomainError(ValueError):
    """An argument lies outside the domain of a transform or formula."""


class NotSupported(ValueError):
    """The request is valid in principle but beyond what is implemented
    (e.g. a simplex dimension above the quadrature cap)."""


class BudgetExceeded(RuntimeWarning):
    """A quadrature hit its evaluation budget before meeting tolerance.

    Issued as a warning; the best estimate is still returned together with
    ``converged=False``.
    """


class TruncationWarning(RuntimeWarning):
    """A sampler stopped at ``max_points`` before the tail tolerance was met."""


class WindowTooSmall(ValueError):
    """The planar simulation window leaves too much expected power outside."""


class EmptySample(ValueError):
    """An operation needs at least one stored point."""


class InsufficientPoints(ValueError):
    """An operation needs more stored points than the sample holds."""


class EmptyInput(ValueError):
    """An empirical statistic was asked of an empty sequence."""
