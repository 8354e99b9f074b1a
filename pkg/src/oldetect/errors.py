"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation 1, I/O 2, non-convergence 3.
"""


class OLDError(Exception):
    """Base class for all errors raised by :mod:`oldetect`."""

    exit_code = 1


class ValidationError(OLDError, ValueError):
    """Inputs violate a documented precondition."""

    exit_code = 1


class ParseError(ValidationError):
    """Malformed input file content.

    Attributes
    ----------
    line : int or None
        1-based line number of the offending record, when known.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DataIOError(OLDError, OSError):
    """A required file is missing or unreadable."""

    exit_code = 2


class ConvergenceError(OLDError, ArithmeticError):
    """Iterative solver hit ``max_iter`` before reaching its tolerance."""

    exit_code = 3

    def __init__(self, message, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
