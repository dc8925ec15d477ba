"""Exception hierarchy shared by all modules."""


class LivsicError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(LivsicError, ValueError):
    pass


class SingularMatrix(LivsicError):
    """Raised when a matrix is numerically singular.

    The condition estimate (largest over smallest singular value) is kept on
    the instance so callers can report it.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class NotHermitian(LivsicError):
    pass


class NotPSD(LivsicError):
    pass


class NearSingular(LivsicError):
    pass


class PoleAtMinusI(LivsicError, ZeroDivisionError):
    pass


class PoleAtOne(LivsicError, ZeroDivisionError):
    pass


class EmptyGrid(LivsicError):
    pass


class DomainViolation(LivsicError):
    """A model was asked to evaluate outside its validity domain."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class BranchAmbiguity(LivsicError):
    pass


class StepCountTooSmall(LivsicError):
    pass


class PoleProximity(LivsicError):
    """The characteristic function is (numerically) at a pole."""

    def __init__(self, message, point=None, condition=float("inf")):
        super().__init__(message)
        self.point = point
        self.condition = condition


class FitResidualTooLarge(LivsicError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SchemaError(LivsicError):
    """Invalid run configuration; ``pointer`` is a JSON pointer to the field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
