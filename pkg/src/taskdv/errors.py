"""Exception types shared across the toolkit."""

from __future__ import annotations


class TaskdvError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(TaskdvError):
    """A referenced column is unknown, duplicated, or structurally invalid."""


class CsvParseError(TaskdvError):
    """A CSV file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DslSyntaxError(TaskdvError):
    """Constraint text does not conform to the grammar."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"at offset {offset}: {message}")


class AnnotationError(TaskdvError):
    """Code annotation failed (span out of range or marker collision)."""


class AssertionFormatError(TaskdvError):
    """Assertion sentinels are unpaired, nested, or otherwise malformed."""


class GenerationError(TaskdvError):
    """The model backend kept returning unusable output."""


class DomainError(TaskdvError):
    """An operation was asked for a value outside its domain."""


class ConfigError(TaskdvError):
    """An error-injection or run configuration is invalid."""


class EnvironmentError_(TaskdvError):
    """A required external program is unavailable."""
