"""
Exception hierarchy for TargetMO.
Every error raised on purpose by the library derives from TargetMOError.
"""

from typing import Any, Optional


class TargetMOError(Exception):
    """Base exception for targeting and benchmarking operations."""

    def __init__(self, message: str, details: Optional[Any] = None):
        self.message = message
        self.details = details
        super().__init__(self.message)


class DimensionError(TargetMOError):
    """Raised when vector lengths or spaces do not match."""
    pass


class EmptySetError(TargetMOError):
    """Raised when an operation needs at least one point."""
    pass


class GeometryError(TargetMOError):
    """Raised on degenerate segments or lines."""
    pass


class ConditioningError(TargetMOError):
    """Raised when a covariance factorization fails after jitter escalation."""
    pass


class DataError(TargetMOError):
    """Raised when training data cannot define a surrogate."""
    pass


class CapabilityError(TargetMOError):
    """Raised when a problem does not support the requested operation."""
    pass


class ConfigError(TargetMOError):
    """Raised on invalid experiment configuration."""
    pass


class RunAbortedError(TargetMOError):
    """Raised when a run stops early; `details` holds the partial history."""

    @property
    def history(self):
        return self.details
