"""Exception hierarchy.

``InputError`` covers anything the caller can fix (bad files, bad
parameters); the CLI maps it to exit code 1. ``NumericError`` signals an
internal numerical failure and maps to exit code 2.
"""


class InputError(ValueError):
    """Invalid user-supplied input."""


class ParseError(InputError):
    """Malformed graph or matrix file.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number of the offending record.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(ArithmeticError):
    """Non-finite values or other numerical breakdown during optimization."""
