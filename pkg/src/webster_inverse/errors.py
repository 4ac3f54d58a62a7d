"""Exception hierarchy shared by every module of the package."""


class WebsterError(Exception):
    """Base class for all package errors."""


class ParameterError(WebsterError, ValueError):
    """An argument or configuration value is outside its admissible set."""


class NumericalError(WebsterError, ArithmeticError):
    """A numerical procedure failed (non-finite values, failed factorisation)."""

    def __init__(self, message, *, step=None, condition=None):
        super().__init__(message)
        self.step = step
        self.condition = condition


class DomainRangeError(WebsterError, ValueError):
    """A requested window or evaluation point lies outside the available data."""


class PairingError(WebsterError, ValueError):
    """Paired samples cannot be matched by realisation index."""

    def __init__(self, message, *, index=None):
        super().__init__(message)
        self.index = index
