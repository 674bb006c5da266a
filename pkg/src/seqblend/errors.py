"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: config/usage problems exit 2, data
problems exit 3, numerical failures exit 4.
"""


class SeqblendError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SeqblendError):
    """Invalid configuration value or combination."""


class ContractError(SeqblendError):
    """A caller violated an operation's precondition."""


class DataError(SeqblendError):
    """Base class for problems with input data or data files."""


class ParseError(DataError):
    """Malformed record in an interaction file; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    """Record is parseable but missing a required field."""


class FormatError(DataError):
    """Binary file does not match its expected on-disk format."""


class NumericalError(SeqblendError):
    """Training or scoring produced non-finite values."""
