"""Exception types shared across the package."""


class RelayselError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(RelayselError):
    """Invalid configuration value, key, or file."""


class NumericError(RelayselError):
    """Numerical failure inside a solver (singularity, divergence, bracketing)."""


class SingularityError(NumericError):
    """Closed-form weight requested at lambda = 0 for a relay with zero gain."""


class DivergenceError(NumericError):
    """Iterative solver produced a non-finite value."""
