"""Exception types shared across the package."""

from __future__ import annotations


class RopeSwayError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RopeSwayError, ValueError):
    """Invalid parameters or configuration.

    ``key`` carries the dotted config path of the offending entry when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DomainError(RopeSwayError, ValueError):
    """A position or argument lies outside the domain of an operation."""


class PlacementError(RopeSwayError, ValueError):
    """Sensor stations cannot resolve the requested modal coordinates."""


class ValidationError(RopeSwayError, ValueError):
    """Two solvers were asked to compare inconsistent setups."""


class IntegrationError(RopeSwayError, RuntimeError):
    """The time integration produced a non-finite state."""

    def __init__(self, message: str, step_index: int | None = None):
        self.step_index = step_index
        if step_index is not None:
            message = f"{message} (step {step_index})"
        super().__init__(message)
