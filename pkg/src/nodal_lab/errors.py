"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument violates a documented precondition."""


class DimensionMismatchError(InputError):
    """Operands live in different ambient dimensions."""


class DegenerateDenominatorError(ArithmeticError):
    """A ratio's denominator fell below the scale-free threshold."""


class DiagnosticFailureError(RuntimeError):
    """A sampled value was non-finite or an internal sanity check failed."""


class SolverError(RuntimeError):
    """Iterative solve failed to converge; carries the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
