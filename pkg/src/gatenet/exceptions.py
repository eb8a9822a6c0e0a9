"""Exception hierarchy shared across the package."""


class GateError(Exception):
    """Base class for all errors raised by gatenet."""


class StructuralError(GateError, ValueError):
    """Input has the wrong shape, size or violates a domain invariant."""


class NumericalError(GateError, ArithmeticError):
    """A computation produced NaN or Inf."""


class TrainingError(NumericalError):
    """Training diverged.

    Attributes
    ----------
    epoch : int
        Epoch (0-based) at which the loss became non-finite.
    """

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ModelFileError(GateError, OSError):
    """A model file is truncated, corrupt or has an unsupported version."""


class ConfigError(GateError, ValueError):
    """Invalid run configuration (unknown key, wrong type)."""
