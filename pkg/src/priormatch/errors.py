"""Exception types shared across the package.

The CLI maps each class to an exit code, so library code raises these
rather than bare ``ValueError``.
"""


class PriorMatchError(Exception):
    """Base class for all package errors."""

    reason = "error"


class InvalidInputError(PriorMatchError, ValueError):
    """Malformed or out-of-contract input."""

    reason = "invalid-input"


class NoSteadyStateError(InvalidInputError):
    """Transition matrix has no unique stationary distribution."""

    reason = "no-steady-state"


class DomainError(InvalidInputError):
    """Value outside the domain of a function (e.g. a non-negative dual)."""

    reason = "domain"


class NumericalError(PriorMatchError, ArithmeticError):
    """Training produced non-finite parameters or costs."""

    reason = "numerical"
