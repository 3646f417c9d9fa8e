"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DanetError(Exception):
    exit_code = 1


class UsageError(DanetError):
    exit_code = 2


class ConfigError(DanetError):
    exit_code = 2


class DataError(DanetError):
    exit_code = 3


class FormatError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class EmptyRecordError(DataError):
    pass


class LabelError(DataError):
    pass


class DuplicateError(DataError):
    pass


class ParameterError(DataError):
    pass


class LeadError(DataError):
    pass


class LengthError(DataError):
    pass


class BoundsError(DataError):
    pass


class NyquistError(ConfigError):
    pass


class CorruptionError(DataError):
    pass


class ShapeError(DanetError, ValueError):
    exit_code = 3


class StateError(DanetError):
    pass


class SequencingError(DanetError):
    exit_code = 4


class NumericError(DanetError):
    exit_code = 5
