"""Exception types shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(PipelineError):
    """A raw input file could not be parsed.

    ``offset`` is the byte/character offset of the failure when known.
    """

    def __init__(self, message: str, path: str | None = None, offset: int | None = None):
        self.path = path
        self.offset = offset
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (offset {offset})"
        super().__init__(detail)


class ConflictingIdsError(ParseError):
    """The same game_id appeared more than once where ids must be unique."""


class FileNameError(ParseError):
    """A review file name does not match the ``<gameid>_<count>.csv`` pattern."""


class SchemaValidationError(PipelineError):
    """A record violated the review-scores schema. ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)


class MissingFieldError(SchemaValidationError):
    def __init__(self, field: str):
        super().__init__(field, f"missing required field {field!r}")


class RangeViolationError(SchemaValidationError):
    def __init__(self, field: str, value: int, lo: int, hi: int):
        self.value = value
        super().__init__(field, f"{field}={value} outside allowed range [{lo}, {hi}]")


class TypeViolationError(SchemaValidationError):
    def __init__(self, field: str, value: object):
        self.value = value
        super().__init__(field, f"{field} must be an integer, got {type(value).__name__} ({value!r})")


class ConflictViolationError(SchemaValidationError):
    def __init__(self, field: str, message: str):
        super().__init__(field, message)


class EmptyGameError(PipelineError):
    """Aggregation was asked to average an empty review list."""


class EmptyDatasetError(PipelineError):
    """A dataset build or feature-matrix build produced zero usable rows."""


class NetworkError(PipelineError):
    """An HTTP request failed after all retries were exhausted."""


class ModelLoadError(PipelineError):
    """A serialized model file is corrupt, truncated, or has an unknown version."""
