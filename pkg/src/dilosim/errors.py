"""Shared exception types."""


class ConfigurationError(ValueError):
    """Bad configuration: dimension mismatches, invalid ranges, unknown keys."""


class NumericError(ArithmeticError):
    """Non-finite values fed into an operation that requires finite inputs."""
