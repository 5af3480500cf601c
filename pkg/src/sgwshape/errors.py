"""Exception types shared across the package.

The CLI maps these onto exit codes: input/usage problems (parse,
validation, bad parameters) exit with 2, numerical failures with 3.
"""


class SgwError(Exception):
    """Base class for all package errors."""


class ParseError(SgwError):
    """A mesh or data file could not be parsed."""


class ValidationError(SgwError):
    """Input violates a structural invariant (bad index, non-manifold edge, ...)."""


class InvalidParam(SgwError):
    """A parameter is outside its documented domain."""


class DimensionMismatch(SgwError):
    """Array shapes are incompatible."""


class NumericalError(SgwError):
    """A computation hit a numerically degenerate configuration."""


class ConvergenceError(SgwError):
    """The eigensolver exhausted its iteration budget.

    Carries the residual that was attained so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateMass(SgwError):
    """The mass matrix has a non-positive diagonal entry."""


class SingularScatter(SgwError):
    """The within-group scatter matrix is singular; reduce the dimension."""


class GroupCountError(SgwError):
    """A two-group operation received the wrong number or size of groups."""


#: Errors caused by the user's inputs or parameters (CLI exit code 2).
USAGE_ERRORS = (ParseError, ValidationError, InvalidParam, DimensionMismatch, GroupCountError)

#: Errors caused by numerical failure (CLI exit code 3).
NUMERICAL_ERRORS = (NumericalError, ConvergenceError, DegenerateMass, SingularScatter)
