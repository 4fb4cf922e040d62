"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/validation problems exit 2,
I/O problems exit 3, violated internal assertions exit 4.
"""

from __future__ import annotations


class SectorPrimesError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SectorPrimesError, ValueError):
    """Invalid parameter or sieve configuration (maps to exit code 2)."""


class PreconditionError(SectorPrimesError, ValueError):
    """A closed-form bound was requested outside its validity range."""

    def __init__(self, message: str, n_threshold: int | None = None):
        super().__init__(message)
        self.n_threshold = n_threshold


class TokenError(SectorPrimesError, ValueError):
    """A resume token could not be accepted. ``reason`` is one of
    'format', 'parameter-mismatch', 'segment-alignment', 'limit'."""

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


class BoundViolation(SectorPrimesError, AssertionError):
    """A complete, above-M shell failed its lower bound (maps to exit 4)."""
