"""Exception types raised across the package."""


class MuboError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(MuboError, ValueError):
    pass


class EmptyInputError(MuboError, ValueError):
    pass


class InvalidInputError(MuboError, ValueError):
    pass


class ContractViolation(MuboError, RuntimeError):
    pass


class SchemaError(MuboError, ValueError):
    pass


class ParseError(MuboError, ValueError):
    """A feature cell could not be parsed as a number."""

    def __init__(self, path, row, column, value):
        self.path = str(path)
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"{self.path}: row {row}, column {column!r}: cannot parse {value!r} as a number"
        )


class DegenerateDataError(MuboError, ValueError):
    pass


class InsufficientMinorityError(MuboError, ValueError):
    pass


class DivergenceError(MuboError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class PoolExhausted(MuboError):
    """No majority candidates remain to propose."""
