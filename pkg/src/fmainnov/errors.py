"""Exception hierarchy.

Validation errors (bad shapes, out-of-range arguments) derive from
``ValidationError``; numerical breakdowns derive from ``NumericalError``.
The CLI maps the two families onto exit codes 2 and 3.
"""


class FmaError(Exception):
    """Base class for all package errors."""


class ValidationError(FmaError, ValueError):
    pass


class NumericalError(FmaError, ArithmeticError):
    pass


# basis
class GridTooCoarse(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class PointOutOfDomain(ValidationError):
    pass


# core
class LagTooLarge(ValidationError):
    pass


class NotCentered(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class InvalidFraction(ValidationError):
    pass


class RankExceeded(ValidationError):
    pass


class ConvergenceFailure(NumericalError):
    pass


# innovations
class SingularGamma(NumericalError):
    pass


class SingularV(NumericalError):
    pass


class NonPSDInput(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


# selection
class SingularTailCovariance(NumericalError):
    pass


class SingularC0(NumericalError):
    pass


class RankExhausted(NumericalError):
    pass


class PenaltyUndefined(ValidationError):
    pass


# simulate / baselines
class DegenerateDraw(NumericalError):
    pass


class NotInvertibleWarning(UserWarning):
    """Simulated FMA operator polynomial has companion spectral radius >= 1."""


class NoConvergenceWarning(UserWarning):
    """Fixed-point iteration hit its iteration cap."""
