"""Exception types shared across the package.

The CLI maps these onto exit codes: schema/config problems exit 2,
I/O problems exit 1, optimizer/training failures exit 3.
"""


class SparrowForestError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SparrowForestError):
    """A dataset violates its contract."""


class SchemaError(DataError):
    """Input data does not match the expected column schema."""


class EmptyFileError(SchemaError):
    """The input file contains no header row at all."""


class RowError(DataError):
    """A single row failed to parse or violated a field invariant."""

    def __init__(self, row: int, column: str, message: str):
        super().__init__(f"row {row}, column {column!r}: {message}")
        self.row = row
        self.column = column


class ConfigError(SparrowForestError):
    """A run configuration is invalid or internally inconsistent."""


class ModelFormatError(SparrowForestError):
    """A serialized model document is malformed or incompatible."""


class OptimizationError(SparrowForestError):
    """The optimizer aborted, e.g. because the fitness function raised."""
