"""Exception and warning types raised by the numerical layers."""


class PhaselockError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(PhaselockError, ValueError):
    pass


class StiffnessError(PhaselockError):
    """Step size underflow or step budget exhausted in an integrator."""


class AccuracyError(PhaselockError):
    """A conserved quantity drifted beyond its allowed residual."""


class StabilityError(PhaselockError):
    """A transport path would carry a recessive solution."""


class TruncationError(PhaselockError):
    """A truncated expansion or recursion did not converge under refinement."""


class DegenerateFrame(PhaselockError):
    pass


class InconsistencyError(PhaselockError):
    """Computed data violate a relation that must hold exactly."""


class RangeError(PhaselockError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    """Iteration budget exhausted; carries the best available estimate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
