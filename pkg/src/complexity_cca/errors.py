"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line driver can map any
failure to a documented nonzero status without a lookup table of its own.
"""


class ComplexityError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ArgumentError(ComplexityError, ValueError):
    """Invalid argument value (axis count, axis index, tolerance, ...)."""

    exit_code = 2


class InputError(ComplexityError):
    """An input file is missing or unreadable."""

    exit_code = 3


class ParseError(InputError):
    """Malformed CSV content; ``line`` is 1-based and includes the header."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(ComplexityError, ValueError):
    """A value outside its admissible domain (e.g. a negative export value)."""

    exit_code = 4

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateTableError(ComplexityError):
    """Too few products or countries survive for a meaningful ordination."""

    exit_code = 4


class ConstantVariableError(ComplexityError):
    """A country variable has zero weighted variance."""

    exit_code = 4

    def __init__(self, column):
        super().__init__(f"variable {column!r} has zero weighted variance")
        self.column = column


class OverParameterizedError(ComplexityError):
    """More regression columns than countries."""

    exit_code = 4


class CollinearityError(ComplexityError):
    """The weighted cross-product matrix of the country variables is singular."""

    exit_code = 5

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class DisconnectedError(ComplexityError):
    """The bipartite product-country graph has more than one component."""

    exit_code = 6

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class ConvergenceError(ComplexityError):
    """An iterative solver hit ``max_iter`` before reaching ``tol``."""

    exit_code = 7

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalError(ComplexityError):
    """Complex spectrum, non-positive eigenvalue where one is required, etc."""

    exit_code = 8


class MappingError(ComplexityError):
    """Product-group mapping contains unknown category labels."""

    exit_code = 9

    def __init__(self, message, offenders=None):
        super().__init__(message)
        self.offenders = offenders or []


class ValidationFailed(ComplexityError):
    """Ordination diagnostics exceeded their tolerances."""

    exit_code = 10
