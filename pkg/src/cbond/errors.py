"""Exception hierarchy shared by the pricing modules and the CLI."""


class CbondError(Exception):
    """Base class for all package errors."""


class DomainError(CbondError, ValueError):
    """An input lies outside the domain of an operation."""


class DimensionError(CbondError, ValueError):
    """A multivariate normal problem exceeds the configured dimension cap."""


class NumericalError(CbondError, ArithmeticError):
    """A numerical routine (bracketing, quadrature) failed to converge."""


class UnsupportedCaseError(CbondError):
    """The requested configuration is outside the implemented regime."""


class ConfigError(CbondError, ValueError):
    """A run configuration is malformed or misses a required field."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"missing or invalid field: {field}")
