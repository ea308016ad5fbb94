"""Exception hierarchy.

Model/usage problems derive from :class:`ModelError` (also a ``ValueError``);
numerical breakdowns derive from :class:`NumericalError`. The CLI maps the
former to exit code 2 and the latter to exit code 3.
"""


class QMemNetError(Exception):
    """Base class for all package errors."""


class ModelError(QMemNetError, ValueError):
    pass


class NumericalError(QMemNetError, ArithmeticError):
    pass


class DimensionMismatch(ModelError):
    pass


class NotHermitian(ModelError):
    pass


class NonPositiveRate(ModelError):
    pass


class EpsilonTooLarge(ModelError):
    pass


class NormViolation(ModelError):
    pass


class UnsupportedCoefficients(ModelError):
    pass


class ScheduleInvalid(ModelError):
    pass


class ConfigError(ModelError):
    pass


class EigenFailure(NumericalError):
    pass


class SingularResolvent(NumericalError):
    pass


class NotHurwitz(NumericalError):
    pass


class BlockStructureViolation(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class WindowTooSmall(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass
