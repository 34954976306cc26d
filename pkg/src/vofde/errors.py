"""Exception types shared across the package."""


class VofdeError(Exception):
    """Base class for all package errors."""


class NumericalAccuracyError(VofdeError):
    """A numerical procedure could not reach its requested accuracy."""


class QuadratureError(NumericalAccuracyError):
    """Graded quadrature did not converge within its refinement budget.

    Carries the best estimate and the last observed change between levels.
    """

    def __init__(self, message, estimate=None, achieved=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved


class ResourceError(VofdeError, MemoryError):
    """A request exceeds configured memory limits (e.g. dense FS at large N)."""


class SingularSystemError(VofdeError, ArithmeticError):
    """A triangular system has a zero on its diagonal."""
