"""Exception hierarchy.

Each class carries the CLI exit code it maps to: 2 for data problems,
3 for numeric failures.
"""


class LscdError(Exception):
    exit_code = 2


class ConfigError(LscdError, ValueError):
    exit_code = 1


class DataError(LscdError):
    exit_code = 2


class CorpusEncodingError(DataError, UnicodeError):
    def __init__(self, path, line_no, reason):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}: invalid UTF-8 at line {line_no}: {reason}")


class FormatError(DataError, ValueError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class CoverageError(DataError, KeyError):
    def __str__(self):
        return self.args[0] if self.args else ""


class NumericError(LscdError, ArithmeticError):
    exit_code = 3


class SingularityError(NumericError):
    pass


class DegenerateVectorError(NumericError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"zero-norm vector for word {word!r}")


class AlignmentImpossibleError(NumericError):
    pass


class UndefinedCorrelationError(NumericError):
    pass


class UnthresholdableError(DataError, ValueError):
    pass


class ShapeError(DataError, ValueError):
    pass
