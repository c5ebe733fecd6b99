"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DelError(Exception):
    exit_code = 1


class ConfigError(DelError, ValueError):
    exit_code = 2


class DataError(DelError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyGraphError(DataError):
    pass


class FormatError(DataError):
    pass


class NumericDegeneracyError(DelError, ArithmeticError):
    exit_code = 4


class CriteriaError(DelError):
    exit_code = 5
