"""Exception hierarchy.

``ValidationError`` subclasses describe bad inputs (CLI exit code 2);
``NumericalError`` subclasses describe computations that cannot be trusted
(CLI exit code 3).
"""


class TwoSourceError(Exception):
    pass


class ValidationError(TwoSourceError, ValueError):
    pass


class NumericalError(TwoSourceError, ArithmeticError):
    pass


class OutOfRange(ValidationError):
    pass


class SupportOverflow(ValidationError):
    pass


class AngleOutOfRange(ValidationError):
    pass


class UnsupportedOrder(ValidationError):
    pass


class InvalidPovm(ValidationError):
    pass


class DegeneratePsf(NumericalError):
    pass


class DegenerateBasis(NumericalError):
    pass


class DegenerateB1(NumericalError):
    pass


class NegativeProbability(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class TruncationTooSmall(NumericalError):
    pass


class ZeroQfi(NumericalError):
    pass


class NonIdentifiable(NumericalError):
    pass
