"""Exception hierarchy; CLI exit codes hang off these classes."""


class CofxError(Exception):
    exit_code = 1


class SchemaError(CofxError, ValueError):
    """Malformed model/graph document or violated type invariant."""

    exit_code = 2


class InstabilityError(CofxError):
    """Model is not stable (companion spectral radius >= 1)."""

    exit_code = 3


class ValidationError(CofxError):
    """An oracle comparison failed."""

    exit_code = 4


class UndefinedDiscrepancyError(CofxError, ArithmeticError):
    """Causal discrepancy requested for an impulse with zero causal response."""
