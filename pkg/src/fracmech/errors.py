"""Exception hierarchy shared by the library and the command line."""


class FracMechError(Exception):
    """Base class for all errors raised by :mod:`fracmech`."""


class ValidationError(FracMechError, ValueError):
    """Invalid input or configuration (maps to CLI exit code 1)."""


class GridMismatchError(ValidationError):
    """Two sampled functions do not live on the same grid."""


class FunctionSpecError(ValidationError):
    """A function-spec string could not be parsed."""

    def __init__(self, message: str, position: int | None = None) -> None:
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class OrderRangeError(ValidationError):
    """Fractional order outside the range an operation supports."""


class NegativeEnergyError(ValidationError):
    """Energy constant must be non-negative."""


class NumericalError(FracMechError, ArithmeticError):
    """A numerical failure (maps to CLI exit code 2)."""


class PoleError(NumericalError):
    """Gamma function evaluated at a non-positive integer."""


class DomainError(NumericalError):
    """Result would leave the admissible domain, e.g. a non-integrable power."""


class IndefiniteMatrixError(NumericalError):
    """Mass matrix has a negative eigenvalue."""


class NonSeparableError(NumericalError):
    """Hamiltonian is outside the separable class handled by the solver."""


class UnsupportedShapeError(NumericalError):
    """Solution shape does not admit the requested reconstruction."""


class ZeroMomentumError(NumericalError):
    """Trajectory inversion needs a nonzero momentum coefficient."""


class KnownDiscrepancyWarning(UserWarning):
    """A residual that the closed-form theory claims is zero is measurably nonzero."""
