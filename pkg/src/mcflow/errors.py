"""Exception types shared across the toolkit."""


class McflowError(Exception):
    """Base class for all toolkit errors."""


class DegenerateComposition(McflowError):
    """Raised when a composition is numerically indistinguishable from vacuum.

    The flux algebra needs a nonvanishing molar sum; compositions with
    sum(Y) below the degeneracy threshold cannot be processed.
    """


class NotStrictlyPositive(McflowError):
    """Raised when an operation requires every mass fraction strictly positive."""


class RateModelInvalid(McflowError):
    """Raised when a reaction-rate model violates one of its structural assumptions."""


class StepRejected(McflowError):
    """Raised when a time step produces a state outside the physical tolerances."""


class PoissonSolveFailed(McflowError):
    """Raised when the pressure Poisson solve does not meet its residual tolerance."""


class ConfigInvalid(McflowError):
    """Raised when a run configuration fails validation."""
