"""Exception hierarchy shared by the whole package."""


class CevError(Exception):
    """Base class for all package errors."""


class DomainError(CevError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConstructionError(CevError, ValueError):
    """Input data cannot be assembled into a valid law, curve or model."""


class UnsupportedModelError(CevError):
    """The model does not satisfy the structural requirements of an operation."""


class NumericError(CevError):
    """Base class for runtime numerical failures."""


class QuadratureError(NumericError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the partial result and the achieved error estimate so callers
    can report diagnostics instead of silently trusting a bad value.
    """

    def __init__(self, message, value=None, achieved=None, requested=None):
        super().__init__(message)
        self.value = value
        self.achieved = achieved
        self.requested = requested

    def payload(self):
        return {
            "error": "quadrature",
            "message": str(self),
            "value": self.value,
            "achieved_tolerance": self.achieved,
            "requested_tolerance": self.requested,
        }


class DegenerateWeightsError(NumericError):
    """All importance weights underflowed; the threshold is too deep."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def payload(self):
        return {"error": "degenerate_weights", "message": str(self), **self.diagnostics}


class ConfigError(CevError, ValueError):
    """A run configuration (CLI flags or JSON config) is invalid."""
