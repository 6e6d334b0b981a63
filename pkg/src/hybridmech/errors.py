"""Exception and warning classes shared across the package."""


class HybridError(Exception):
    """Base class for all errors raised by hybridmech."""


class InvalidDimensionError(HybridError, ValueError):
    pass


class SpaceMismatchError(HybridError, ValueError):
    pass


class PreconditionError(HybridError, ValueError):
    """A physical precondition of a calculator or model is violated."""


class PoleError(PreconditionError):
    pass


class NoSteadyStateError(HybridError):
    """Drift matrix is not strictly stable; no steady state exists."""


class StiffnessError(HybridError):
    """The adaptive integrator could not make progress."""


class TruncationError(HybridError):
    def __init__(self, message: str, suggested_dims: tuple[int, ...] | None = None):
        super().__init__(message)
        self.suggested_dims = suggested_dims


class PhysicsWarning(UserWarning):
    """A parameter lies outside the validity regime of a formula."""


class TruncationWarning(UserWarning):
    """Population reached the top Fock levels during a simulation."""
