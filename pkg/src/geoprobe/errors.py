"""Exception types shared across the package.

Every error the CLI maps to an exit code lives here so the mapping stays
in one place. Module-specific failures subclass these rather than raising
bare ValueError when callers need to tell the cases apart.
"""


class GeoprobeError(Exception):
    """Base class for all package errors."""


class SchemaError(GeoprobeError):
    """A wire document is missing a required key or has a malformed shape."""


class TypeFieldError(SchemaError):
    """A wire document field has the wrong type (e.g. a yield as string)."""


class VersionError(SchemaError):
    """A wire document declares an unrecognized protocol version."""


class ParseError(GeoprobeError):
    """A wire document could not be decoded at all."""


class IntegrityError(GeoprobeError):
    """A structurally valid document violates a semantic invariant."""


class CapacityError(GeoprobeError):
    """An exact solver was asked for an instance above its size cap."""


class FitDivergenceError(GeoprobeError):
    """Gradient descent failed to make progress for too many iterations."""


class UnknownPacketError(GeoprobeError):
    """An arbitration decision refers to no pending packet."""


class DecisionConflictError(GeoprobeError):
    """An arbitration decision was already recorded for this packet."""


class RoutingError(GeoprobeError):
    """No specialist agent is registered for an execution vector."""


class InfeasibleTargetError(GeoprobeError):
    """The requested portfolio yield is outside the attainable range."""


class ModelError(GeoprobeError):
    """A market model failed validation (asymmetric or non-PD covariance)."""


class ConfigError(GeoprobeError):
    """Campaign configuration failed validation.

    Carries the full list of violations, not just the first one found.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
