"""Exception types shared across the package."""


class BerrriError(Exception):
    """Base class for all package errors."""


class ValidationError(BerrriError):
    """Invalid user-supplied data, configuration, or file content."""


class EngineError(BerrriError):
    """Numerical corruption detected during inference (aborts the sweep)."""
