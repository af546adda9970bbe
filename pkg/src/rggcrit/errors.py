"""Shared exception types.

The CLI maps these to exit codes: usage errors exit 1, DomainError and
subclasses exit 2, I/O problems exit 3.
"""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """Parameters are outside the asymptotic regime (e.g. n too small for
    the radius formula to have a positive numerator)."""


class DegenerateInstanceError(DomainError):
    """A point-set instance is too small for the requested statistic."""


class AdjacentPairError(DomainError):
    """Local vertex connectivity is undefined for adjacent endpoints."""
