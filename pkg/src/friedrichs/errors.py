"""Exception and warning types raised across the package."""


class ModelError(ValueError):
    """Invalid model definition or invalid input to a model operation."""


class ContinuationError(ValueError):
    """The requested analytic continuation is not available for a channel."""


class DomainError(ValueError):
    """A complex argument lies on the wrong side of the real axis."""


class BranchPointError(ValueError):
    """Evaluation requested exactly at a branch point of the continuum."""


class NotApplicableError(ValueError):
    """The operation does not apply to this kind of model."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DegeneracyError(ValueError):
    """Two eigenvalue branches of the reduced generator collide."""

    def __init__(self, message, branches=()):
        super().__init__(message)
        self.branches = tuple(branches)


class NearDefectivePoleError(ValueError):
    """The residue normalization 1 - d(omega)/dz vanishes at a pole."""


class PoleConsistencyError(RuntimeError):
    """A converged pole violates the sheet structure (Im z >= 0)."""


class IntegrationAborted(FloatingPointError):
    """Time stepping produced non-finite values."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class FitRejected(ValueError):
    """The trajectory is not suitable for an exponential fit."""

    def __init__(self, message, revival_time=None):
        super().__init__(message)
        self.revival_time = revival_time


class StabilityWarning(UserWarning):
    pass


class RecurrenceWarning(UserWarning):
    pass


class QuadratureWarning(UserWarning):
    pass
