"""Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it:
2 for usage and configuration problems, 3 for problems with the data.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1
    code = "toolkit_error"


# --------------------------- Usage / configuration ---------------------------
class UsageError(ToolkitError):
    exit_code = 2
    code = "usage"


class InvalidArgumentError(UsageError):
    code = "invalid_argument"


class InvalidConfigError(UsageError):
    code = "invalid_config"


class ConfigNotFoundError(UsageError):
    code = "config_not_found"


class InvalidBandsError(UsageError):
    """Band spec has gaps, overlaps, or does not cover a feature's range."""

    code = "invalid_bands"


class MissingColumnError(UsageError):
    code = "missing_column"


# --------------------------- Data --------------------------------------------
class DataError(ToolkitError):
    exit_code = 3
    code = "data_error"


class SchemaMismatchError(DataError):
    """CSV header lacks a column the schema requires."""

    code = "schema_mismatch"


class MalformedRowError(DataError):
    code = "malformed_row"

    def __init__(self, line_number: int, expected: int, found: int):
        self.line_number = line_number
        self.expected = expected
        self.found = found
        super().__init__(
            f"line {line_number}: expected {expected} fields, found {found}"
        )


class InsufficientDataError(DataError):
    code = "insufficient_data"


class UnknownCategoryError(DataError):
    code = "unknown_category"


class EmptyMatrixError(DataError):
    code = "empty_matrix"


class ModelFormatError(DataError):
    code = "model_format"
