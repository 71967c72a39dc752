"""Exception hierarchy shared by every stage of the pipeline.

``KpForecastError`` is the root.  ``DataError`` covers everything caused by
the *content* of inputs (malformed files, incompatible shapes, empty
intersections); the CLI maps it to exit code 2.  Bad call arguments that a
programmer controls (negative lag spec, mtry out of range, ...) raise plain
``ValueError`` and are not part of this hierarchy.
"""

from __future__ import annotations

__all__ = [
    "KpForecastError",
    "DataError",
    "MalformedLine",
    "BadTimestamp",
    "NonMonotonicTime",
    "ValueOutOfRange",
    "CadenceMismatch",
    "EmptyIntersection",
    "IndexOutOfRange",
    "EmptyDataset",
    "NonFiniteValue",
    "DimensionMismatch",
    "KOutOfRange",
    "DegenerateData",
    "EmptyInput",
    "LengthMismatch",
    "EmptyTestSet",
]


class KpForecastError(Exception):
    """Root of all library-specific exceptions."""


class DataError(KpForecastError):
    """Problem caused by input data content (CLI exit code 2)."""


class _LineError(DataError):
    """A data error tied to a specific line of a text file."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MalformedLine(_LineError):
    """Wrong field count or an unparsable numeric field."""


class BadTimestamp(_LineError):
    """Timestamp not in canonical minute-resolution UTC form, or misaligned."""


class NonMonotonicTime(_LineError):
    """Timestamps not strictly increasing within one file."""


class ValueOutOfRange(_LineError):
    """A value outside its physical range (negative speed, Kp beyond 0..9)."""


class CadenceMismatch(DataError):
    """A series does not sit on the sampling grid an operation requires."""


class EmptyIntersection(DataError):
    """No prediction instant has full lag coverage across all sources."""


class IndexOutOfRange(DataError):
    """A feature index refers outside the dataset width."""


class EmptyDataset(DataError):
    """An operation that needs rows received none."""


class NonFiniteValue(DataError):
    """NaN or infinity where a finite number is required."""


class DimensionMismatch(DataError):
    """Row width does not match what a model was fitted on."""


class KOutOfRange(DataError):
    """Requested component/feature count outside the valid range."""


class DegenerateData(DataError):
    """Data with zero variance where variance is required (PCA)."""


class EmptyInput(DataError):
    """An empty sequence where at least one element is required."""


class LengthMismatch(DataError):
    """Two paired sequences differ in length."""


class EmptyTestSet(DataError):
    """A time split left no rows on the evaluation side."""
