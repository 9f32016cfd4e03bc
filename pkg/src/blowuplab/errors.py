"""Exception hierarchy shared by all blowuplab modules."""


class BlowupLabError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(BlowupLabError, ValueError):
    """A parameter violates the documented precondition of an operation."""


class NonIntegrableDamping(InvalidParameter):
    """Damping coefficient is not in L^1 (power family with beta <= 1)."""


class ValidationError(InvalidParameter):
    """Configuration failed validation; ``cause`` names the violated invariant."""

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause


class ParseError(BlowupLabError):
    """Malformed configuration text."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalFailure(BlowupLabError):
    """Base class for failures of a numerical method."""


class QuadratureFailure(NumericalFailure):
    pass


class ToleranceNotMet(NumericalFailure):
    pass


class StepSizeTooLarge(NumericalFailure):
    pass


class OverflowGuard(NumericalFailure):
    pass


class RiccatiBlowup(NumericalFailure):
    """The backward Riccati integration left the admissible band (wrong branch)."""


class NaNDetected(NumericalFailure):
    pass


class CFLViolation(NumericalFailure):
    pass


class GridMismatch(BlowupLabError):
    pass


class NoBlowup(BlowupLabError):
    """Kato problem parameters lie on the global-existence side."""


class InsufficientPoints(BlowupLabError):
    pass
