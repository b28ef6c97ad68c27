"""Exception types raised across the package.

Every error the CLI can surface maps to one of these classes; the CLI
serializes the class name as the machine-readable error kind.
"""


class EmbaggError(Exception):
    """Base class for all package errors."""


class EmptyInput(EmbaggError, ValueError):
    """An operation received an empty collection where at least one item is required."""


class MissingSplit(EmbaggError, FileNotFoundError):
    """A dataset directory lacks one of the train/valid/test files."""

    def __init__(self, split: str, path: str):
        super().__init__(f"missing {split!r} split file: {path}")
        self.split = split
        self.path = path


class EmptySplit(EmbaggError, ValueError):
    """A split file parsed to zero documents."""

    def __init__(self, split: str):
        super().__init__(f"split {split!r} contains no documents")
        self.split = split


class MalformedRecord(EmbaggError, ValueError):
    """A row of a dataset file could not be parsed into a document."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class CorruptStore(EmbaggError, ValueError):
    """An embedding store file is unreadable: bad magic, bad version, or truncated."""


class UnknownDocument(EmbaggError, KeyError):
    """A document id does not resolve in the embedding store."""

    def __init__(self, doc_id: str):
        super().__init__(doc_id)
        self.doc_id = doc_id


class InsufficientTokens(EmbaggError, ValueError):
    """The matrix has too few token positions for the requested aggregation."""


class InvalidStep(EmbaggError, ValueError):
    """A step index lies outside the schedule (or optimizer) range."""


class NonFiniteGradient(EmbaggError, FloatingPointError):
    """A gradient contained NaN or infinity."""


class ShapeError(EmbaggError, ValueError):
    """Array dimensions do not agree."""


class UndefinedMetric(EmbaggError, ValueError):
    """The metric is undefined for the given labels (e.g. single-class ROC-AUC)."""
