"""Exception types raised by closedtest."""


class ClosedTestError(Exception):
    """Base class for all closedtest errors."""


class InvalidParameterError(ClosedTestError, ValueError):
    pass


class ZeroVarianceError(InvalidParameterError):
    pass


class CapacityError(ClosedTestError):
    """Raised when a computation would exceed a configured enumeration limit."""


class InvalidQueryError(ClosedTestError, KeyError):
    pass


class UnsupportedError(ClosedTestError):
    pass


class DecompositionError(ClosedTestError, ValueError):
    """Matrix is not positive semi-definite.

    ``minor`` is the 1-based order of the leading principal minor where the
    factorization broke down.
    """

    def __init__(self, message: str, minor: int):
        super().__init__(message)
        self.minor = minor


class ParseError(ClosedTestError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
