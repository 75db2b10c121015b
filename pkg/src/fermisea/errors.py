"""Exception hierarchy shared by all fermisea modules."""


class FermiSeaError(Exception):
    """Base class for every error raised by this package."""


class GridSnapError(FermiSeaError):
    """A grid sea was shifted by a non cell-multiple with snapping disabled."""


class MissingCoefficient(FermiSeaError):
    """A coefficient table does not cover the differences a matrix needs."""


class NotHermitian(FermiSeaError):
    pass


class ConvergenceFailure(FermiSeaError):
    pass


class DomainError(FermiSeaError, ValueError):
    pass


class QuadratureResolutionError(FermiSeaError):
    """The quadrature grid is too coarse for the kernel's oscillation scale."""


class NotSubVolume(FermiSeaError):
    """The growth target does not grow strictly slower than the volume L^d."""


class BudgetExceeded(FermiSeaError):
    """A ladder construction needs more measure than the circle provides."""


class VerificationFailed(FermiSeaError):
    """A constructed sea failed its post-hoc minorant check."""


class DegenerateFit(FermiSeaError):
    pass


class SpecError(FermiSeaError):
    """Malformed sea specification.

    Parameters
    ----------
    line : int
        1-based line of the offending text (best effort for semantic errors).
    reason : str
        Human readable diagnostic.
    """

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason
