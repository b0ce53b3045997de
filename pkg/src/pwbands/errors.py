"""Exception hierarchy.

Everything raised deliberately by the package derives from ``PWBandsError``.
Validation problems also derive from ``ValueError`` and numerical breakdowns
from ``ArithmeticError`` so callers can catch them the usual way.
"""


class PWBandsError(Exception):
    """Base class for all package errors."""


class ValidationError(PWBandsError, ValueError):
    pass


class NumericalError(PWBandsError, ArithmeticError):
    pass


class InvalidParams(ValidationError):
    pass


class InvalidRisk(ValidationError):
    pass


class DuplicateInputs(ValidationError):
    pass


class QueryCollision(ValidationError):
    """A query point coincides with an observed input."""


class NonMonotoneCdf(ValidationError):
    pass


class EmptyObservedIntervals(ValidationError):
    pass


class IllConditioned(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class DegenerateDesign(NumericalError):
    pass


class NoStrictlyFeasiblePoint(NumericalError):
    pass


class Infeasible(NumericalError):
    """The feasible set of a convex program is empty."""
