"""Exception hierarchy shared by all singvar modules."""


class SingvarError(Exception):
    """Base class for all library errors."""


class GridMismatchError(SingvarError):
    """Two epsilon nets live on different gauges or grids."""


class InvertibilityError(SingvarError):
    """Division by a net that is not strictly positive in modulus."""


class InsufficientDataError(SingvarError):
    """Grid too short for the requested asymptotic diagnostic."""


class ValidationError(SingvarError):
    """Input violates a documented precondition."""


class ConstructionError(SingvarError):
    """A derived object (kernel, table, ...) could not be built."""


class CapabilityError(SingvarError):
    """Query exceeds what the object declares it can answer."""


class AccuracyError(SingvarError):
    """Requested tolerance could not be achieved within budget."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class StiffnessError(SingvarError):
    """Step size underflow during integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DivergenceError(SingvarError):
    """State blow-up during integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InvalidStateError(SingvarError):
    """The integrated state left the physically admissible region."""


class DegenerateSystemError(SingvarError):
    """A closed-form solve hit a singular configuration."""


class ConsistencyError(SingvarError):
    """Two independent computation paths disagree beyond tolerance."""


class StepSizeError(SingvarError):
    """Descent iteration stopped making progress; step size likely too large."""


class ConfigError(SingvarError):
    """Invalid experiment configuration."""
