"""Exception types shared by every module.

The CLI maps :class:`ValidationError` (and its subclasses) to exit code 1
and :class:`ResourceError` to exit code 2.
"""

from __future__ import annotations


class SimplicialError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SimplicialError, ValueError):
    """Malformed input: duplicate vertices, bad parameters, bad files."""


class NotFoundError(ValidationError, KeyError):
    """A vertex or simplex that was referenced is not stored."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class PreconditionError(ValidationError):
    """An operation was called on a configuration it does not apply to."""


class ResourceError(SimplicialError, RuntimeError):
    """A size cap was exceeded (simplex count, point count).

    ``partial`` optionally carries whatever was computed before the failure.
    """

    def __init__(self, message: str, count: int | None = None, partial=None):
        super().__init__(message)
        self.count = count
        self.partial = partial
