"""Exception hierarchy shared by the library and the command-line front end."""


class CensTailError(Exception):
    """Base class for all errors raised by censtail."""


class DomainError(CensTailError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(DomainError):
    """An experiment configuration violates one of its invariants.

    The offending field name is kept in ``field`` so front ends can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DataError(CensTailError, ValueError):
    """Input data could not be parsed or is not a valid censored sample."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(CensTailError, ArithmeticError):
    """A quantity required by an estimator vanished or became non-finite."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (index {index})"
        super().__init__(message)
        self.index = index
