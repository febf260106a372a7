"""Exception hierarchy shared by every module."""


class OrthantError(Exception):
    """Base class for all library errors."""


class DomainError(OrthantError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class FormatError(OrthantError, ValueError):
    """Input file is not a rectangular numeric table."""


class InsufficientData(OrthantError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateSample(OrthantError, ValueError):
    """Sample has no spread (e.g. constant) where spread is required."""


class NumericalError(OrthantError, ArithmeticError):
    """Iteration or quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class StartSupportError(OrthantError, ValueError):
    """The parametric start density vanishes at an observation."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EvaluationUnderflow(OrthantError, ArithmeticError):
    """A density needed as a divisor or inside a log is zero."""


class DegenerateRow(OrthantError, ValueError):
    """Every posterior mixture weight of an observation is zero."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class InfeasibleStructure(OrthantError, ValueError):
    """A variation matrix admits no nonnegative correlation for some pair."""


class AmbiguousMinimum(UserWarning):
    """Cross-validation objective is flat over the search region."""
