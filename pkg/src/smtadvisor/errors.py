"""Exception hierarchy shared by every stage of the pipeline.

Validation errors map to CLI exit code 2 and carry their class name as
``kind`` so the tool server can report it in JSON-RPC error data.
"""

from __future__ import annotations


class AdviseError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class ValidationError(AdviseError, ValueError):
    """Input document or argument violates a stated invariant."""


class UnknownVersion(ValidationError):
    pass


class MalformedLine(ValidationError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DanglingReference(ValidationError):
    pass


class SlotOnNonMemoryInstr(ValidationError):
    pass


class UnknownBlock(ValidationError):
    pass


class AddressCountMismatch(ValidationError):
    def __init__(self, bb_id: int, expected: int, actual: int, lineno: int | None = None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(
            f"{where}block {bb_id} expects {expected} addresses, got {actual}"
        )
        self.bb_id = bb_id
        self.expected = expected
        self.actual = actual


class UnbalancedRegion(ValidationError):
    pass


class NonMonotonicTaskId(ValidationError):
    pass


class RegionNotFound(ValidationError):
    pass


class NonPositiveCount(ValidationError):
    pass


class EmptyProfile(ValidationError):
    pass


class EmptyRegion(ValidationError):
    pass


class InvalidParam(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class SingleTask(ValidationError):
    """A region with one task cannot be split across two threads."""
