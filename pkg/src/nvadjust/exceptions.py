"""Exception hierarchy shared across the package."""


class NewsvendorError(Exception):
    """Base class for all package errors."""


class InvalidCostError(NewsvendorError, ValueError):
    """Cost parameters do not define a proper newsvendor problem."""


class DomainError(NewsvendorError, ValueError):
    """An argument lies outside the domain of the operation."""


class SpecError(NewsvendorError, ValueError):
    """An ARMA specification is non-stationary, non-invertible or malformed."""


class InsufficientHistoryError(NewsvendorError, ValueError):
    """Not enough observations to fit or forecast."""


class FitError(NewsvendorError, RuntimeError):
    """Model estimation failed to produce a valid fit."""


class NonFiniteObjectiveError(NewsvendorError, ArithmeticError):
    """The objective returned NaN or infinity."""

    def __init__(self, point, value):
        self.point = tuple(float(v) for v in point)
        self.value = value
        super().__init__(f"objective is {value!r} at {self.point}")


class ConfigError(NewsvendorError, ValueError):
    """Invalid experiment or tuner configuration."""


class DataError(NewsvendorError, ValueError):
    """Input demand data failed to parse or validate."""
