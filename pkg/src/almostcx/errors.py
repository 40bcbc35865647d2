class GeometryError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GeometryError, ValueError):
    """A point lies outside the chart."""


class ChartError(GeometryError, ValueError):
    """Fields living on incompatible charts were combined."""


class CapabilityError(GeometryError):
    """A derivative was requested from a backing that cannot supply it."""


class ContractError(GeometryError, ValueError):
    """An operation's precondition on its inputs does not hold."""


class PreconditionError(ContractError):
    """A geometric precondition (PH submanifold, J-invariant split, ...) fails."""


class InvalidSpecError(GeometryError, ValueError):
    """Malformed configuration or torus bundle data."""
