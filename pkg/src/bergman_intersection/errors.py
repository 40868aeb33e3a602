"""Exception hierarchy shared by all modules."""


class BergmanIntersectionError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BergmanIntersectionError, ValueError):
    """A point lies outside the domain of an operation."""


class CornerProximityError(DomainError):
    """Evaluation requested too close to a corner of the lens."""


class NearSingularError(DomainError):
    """A kernel was evaluated too close to its singular set."""


class PreconditionError(BergmanIntersectionError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(BergmanIntersectionError, ArithmeticError):
    """A numerical procedure failed to reach its target."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AccuracyError(NumericalError):
    """A quadrature error estimate exceeds the requested tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class QuadratureDivergence(NumericalError):
    """An improper integral was detected to diverge."""

    def __init__(self, message, panel_values=None):
        super().__init__(message)
        self.panel_values = panel_values


class SamplingError(NumericalError):
    """Too few points could be placed on a manifold."""


class OptimizationError(NumericalError):
    """Every start of a multi-start minimisation failed."""


class InconsistencyError(NumericalError):
    """A finite-difference Hessian is not Hermitian within tolerance."""


class CertificationError(NumericalError):
    """Plurisubharmonicity could not be certified on a region."""


class InvariantViolation(BergmanIntersectionError):
    """A data-type invariant does not hold (e.g. vanishing gradient)."""
