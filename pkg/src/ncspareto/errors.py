"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, dimensions, or parameter values."""


class ProtocolError(RuntimeError):
    """Buffer state machine driven past its admissible read depth."""


class NumericalError(RuntimeError):
    """A numerical kernel failed to converge."""
