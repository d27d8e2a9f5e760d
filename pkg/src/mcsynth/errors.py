"""Exception types shared across the library."""


class McsynthError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(McsynthError, ValueError):
    """A configuration value or parameter is outside its valid range."""


class InvalidInputError(McsynthError, ValueError):
    """Input data violates a precondition (shape, length, finiteness)."""


class InvalidStateError(McsynthError, RuntimeError):
    """An object is used in a way its lifecycle forbids (e.g. a gradient
    tape replayed after its single backward pass)."""


class UndefinedReferenceError(McsynthError, ValueError):
    """A relative metric was asked for against an all-zero reference."""


class DivergenceError(McsynthError, RuntimeError):
    """Gradient descent diverged.  Carries the loss history up to the
    point of failure in ``history``."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
