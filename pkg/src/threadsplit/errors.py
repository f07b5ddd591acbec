"""Exception types shared across the package."""

from __future__ import annotations


class ThreadSplitError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(ThreadSplitError):
    """Raised when expression text cannot be parsed.

    Carries the byte offset of the failure and the set of token kinds that
    would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = tuple(expected)


class UnboundIdentifier(ThreadSplitError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__("unbound identifier(s): " + ", ".join(self.names))


class MissingKey(ThreadSplitError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"MissingKey {key}")


class DuplicateKey(ThreadSplitError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"DuplicateKey {key}")


class DivisionByZeroAtPoint(ThreadSplitError):
    """Jet division where the divisor's value vanishes at the base point."""


class DomainErrorAtPoint(ThreadSplitError):
    """Jet function applied outside its domain at the base point."""


class OrderExhausted(ThreadSplitError):
    """A derivative beyond the truncation order of a jet was requested."""


class NotLorentzian(ThreadSplitError):
    """Metric data fails the threading-form signature requirements."""


class SingularSpatialMetric(ThreadSplitError):
    """The induced spatial metric is not invertible at the point."""


class SingularMetric(ThreadSplitError):
    """The 4D metric is not invertible at the point."""


class InputError(ThreadSplitError):
    """Malformed run configuration, spec file, or point source."""
