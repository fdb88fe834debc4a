"""Exception types shared across the package."""


class DaeptError(Exception):
    """Base class for all daept errors."""


class ConfigError(DaeptError):
    """Invalid configuration: bad dimensions, unknown options, broken layer chains."""


class DataError(DaeptError):
    """Malformed or inconsistent input data."""


class NumericalError(DaeptError):
    """A numeric operation produced NaN or Inf."""


class TrainingDivergedError(NumericalError):
    """Training aborted because the loss became non-finite."""
