"""Exceptions shared across leraBench.

World precondition violations and failed episodes are data, not exceptions;
these classes cover configuration bugs, backend transport and undefined metrics.
"""


class LeraError(Exception):
    """Base class for every leraBench error."""


class ConfigurationError(LeraError):
    """A task definition, suite config or backend setting is unusable."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TransportError(LeraError):
    """A model backend could not produce a response."""


class UndefinedMetricError(LeraError):
    """A metric was requested over input on which it is not defined."""
