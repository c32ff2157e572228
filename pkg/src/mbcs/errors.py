"""Exception hierarchy.

Validation errors describe bad input (CLI exit code 2); numeric errors
describe a computation that could not reach its contract (exit code 3).
"""


class MBCSError(Exception):
    pass


class ValidationError(MBCSError, ValueError):
    pass


class NumericError(MBCSError, ArithmeticError):
    pass


class DuplicatePort(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class SizeMismatch(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NonPositiveBandwidth(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class GridTooFine(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class QuadratureFailure(NumericError):
    pass


class RejectionBudgetExceeded(NumericError):
    pass


class EnvelopeViolation(NumericError):
    """Target density exceeded the rejection envelope."""


class NoCollisionFreeMass(NumericError):
    """Every output configuration is bunched; nothing to sample."""
