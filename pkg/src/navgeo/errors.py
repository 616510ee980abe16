"""Exception taxonomy shared across the package.

Every error raised by navgeo derives from NavGeoError so callers (and the
CLI) can catch one base class. Subclasses carry whatever context is cheap
to attach: offsets for parse errors, witness points for validation.
"""
from __future__ import annotations


class NavGeoError(Exception):
    """Base class for all navgeo errors."""


class NotPositiveDefinite(NavGeoError):
    """A matrix that must be symmetric positive definite is not."""


class NonFiniteState(NavGeoError):
    """An integrator state or field value became NaN or infinite."""


class NonFiniteValue(NavGeoError):
    """An expression evaluated to NaN or infinity."""


class DomainError(NavGeoError):
    """An elementary function was applied outside its domain (log, sqrt)."""


class ExpressionError(NavGeoError):
    """Base class for expression parsing errors."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text; `offset` is the byte position."""


class UnknownIdentifier(ExpressionError):
    """Identifier is not a coordinate, constant, or known function."""


class ArityError(ExpressionError):
    """A function was called with the wrong number of arguments."""


class ZeroVector(NavGeoError):
    """A fiber vector that must be nonzero is zero."""


class GradientAtZero(NavGeoError):
    """Norm gradient requested at the zero vector, where it is undefined."""


class ZeroVelocity(NavGeoError):
    """A path sample has vanishing velocity where a nonzero one is required."""


class CurveLeftDomain(NavGeoError):
    """A curve or integrated path left the chart domain."""


class NotClosed(NavGeoError):
    """A loop's endpoints do not coincide within tolerance."""


class DegenerateWind(NavGeoError):
    """Wind norm at a base point makes a holonomy formula singular."""


class DegenerateNorm(NavGeoError):
    """Norm correction hit a nonpositive denominator."""


class UnknownScenario(NavGeoError):
    """No built-in scenario with the requested name."""


class ScenarioParseError(NavGeoError):
    """Scenario JSON is structurally invalid; message carries the location."""


class ScenarioValidationError(NavGeoError):
    """Scenario fields violate geometric constraints; message carries a witness."""


class InconsistentVerdicts(NavGeoError):
    """Two classification routes that must agree decisively disagree."""
