"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GmeError`,
and additionally from the builtin exception a caller would naturally expect
(``ValueError`` for bad input, ``ArithmeticError`` for numerical failures).
The CLI maps the three families below onto its exit codes.
"""


class GmeError(Exception):
    """Base class for all package errors."""


class ConfigError(GmeError, ValueError):
    """Malformed schema, model document, measure spec or run config."""


class DataError(GmeError, ValueError):
    """Input data that cannot be encoded or integrated."""


class NumericError(GmeError, ArithmeticError):
    """A computation failed numerically."""


class MeasureError(DataError):
    """A measure violates (or would violate) its construction requirements."""


class ConvergenceError(NumericError):
    """An iterative fit did not converge."""


class SeparationError(ConvergenceError):
    """Perfect or quasi-perfect separation in a binomial fit."""


class DomainError(NumericError):
    """A value is outside the domain of a distribution family."""
