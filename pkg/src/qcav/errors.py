"""Exception hierarchy shared by all qcav modules."""


class QcavError(Exception):
    """Base class for every error raised by qcav."""


class InvalidArgumentError(QcavError, ValueError):
    pass


class ResourceLimitError(QcavError):
    """Requested Hilbert space exceeds the configured qubit cap."""


class NumericalError(QcavError, ArithmeticError):
    """A numerical routine failed; ``residual`` carries the offending size."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotPSDError(NumericalError):
    pass


class CanonicalizationError(NumericalError):
    """Identity is not in the linear span of a Kraus family."""


class IncompleteFamilyError(QcavError):
    """Operation needs a trace-preserving family but got a deficient one."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DecodeError(NumericalError):
    pass


class UncorrectablePatternError(QcavError):
    """Syndrome shows errors on more than one pair."""
