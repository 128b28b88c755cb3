"""Exception hierarchy shared by all modules."""

__all__ = [
    "NLSRotError",
    "InvalidGrid",
    "InvalidField",
    "GridMismatch",
    "FieldFormatError",
    "TruncationError",
    "SingularTime",
    "DegenerateInput",
    "InvalidProblem",
    "WrongBranch",
    "NonConvergence",
    "UnsupportedExponent",
    "BlowUpDetected",
    "BlowUpOnLensInterval",
]


class NLSRotError(Exception):
    """Base class for every error raised by :mod:`nlsrot`."""


class InvalidGrid(NLSRotError, ValueError):
    pass


class InvalidField(NLSRotError, ValueError):
    pass


class GridMismatch(NLSRotError, ValueError):
    pass


class FieldFormatError(NLSRotError, ValueError):
    pass


class TruncationError(NLSRotError):
    pass


class SingularTime(NLSRotError, ValueError):
    pass


class DegenerateInput(NLSRotError, ValueError):
    pass


class InvalidProblem(NLSRotError, ValueError):
    pass


class WrongBranch(NLSRotError):
    pass


class NonConvergence(NLSRotError):
    """Iteration budget exhausted; ``solution`` holds the best iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class UnsupportedExponent(NLSRotError, ValueError):
    pass


class BlowUpDetected(NLSRotError):
    def __init__(self, t, message=None):
        super().__init__(message or f"blow-up detected at t={t:.6g}")
        self.t = t


class BlowUpOnLensInterval(BlowUpDetected):
    pass
