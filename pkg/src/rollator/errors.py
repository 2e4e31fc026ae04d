"""Exception hierarchy. The CLI maps these onto exit codes."""


class RollatorError(Exception):
    """Base class for all package errors."""


class DataError(RollatorError, ValueError):
    """Malformed or inconsistent input data (exit code 3)."""


class ModelFormatError(DataError):
    """A persisted model file is unreadable, mis-versioned or invalid."""


class NumericalError(RollatorError, ArithmeticError):
    """A numeric procedure could not proceed (exit code 4)."""
