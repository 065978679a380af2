"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by xlingsim."""


class ValidationError(ToolkitError):
    """An input value violates a documented invariant."""


class FormatError(ToolkitError):
    """A binary embedding file is malformed or corrupt."""


class SchemaError(ToolkitError):
    """A CSV input does not match its schema (columns, ranges, duplicates)."""


class AnalysisError(ToolkitError):
    """An analysis cannot proceed (empty join, incomplete grid, gated pooling)."""
