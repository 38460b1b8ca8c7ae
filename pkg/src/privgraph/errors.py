"""Exception hierarchy shared across the package."""


class PrivGraphError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(PrivGraphError):
    """A feature/vocabulary/graph file violates its documented schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(PrivGraphError):
    """Semantically invalid in-memory data (bad label, index out of range, ...)."""


class ConfigError(PrivGraphError):
    """Invalid model/training configuration, including unknown config keys."""


class DataMismatchError(PrivGraphError):
    """Inputs that do not belong together (vocab hash mismatch, missing fields)."""


class NumericError(PrivGraphError):
    """Non-finite value produced by a numeric operation."""
