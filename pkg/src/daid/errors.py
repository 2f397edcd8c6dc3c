"""Exception types. Each carries the CLI exit code it maps to."""


class DaidError(Exception):
    exit_code = 1


class ConfigError(DaidError, ValueError):
    exit_code = 2


class DataError(DaidError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message)


class EmptyDataset(DataError):
    pass


class EmptyInput(DataError):
    pass


class UnseenCategory(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ShapeMismatch(DataError):
    pass


class DegenerateLabels(DataError):
    """Raised when a score/label set lacks one of the two classes."""


class NumericError(DaidError, FloatingPointError):
    exit_code = 4


class NonFiniteLoss(NumericError):
    def __init__(self, message, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        if epoch is not None:
            message = f"{message} (epoch {epoch}, batch {batch})"
        super().__init__(message)


class NonFiniteGradient(NumericError):
    pass


class UnknownNode(DaidError, KeyError):
    exit_code = 3

    def __str__(self):
        return Exception.__str__(self)


class MissingCell(DaidError, KeyError):
    exit_code = 3

    def __str__(self):
        return Exception.__str__(self)


class WeightSumError(DaidError, ValueError):
    exit_code = 3
