"""Exception hierarchy shared by the numerics package and the CLI."""


class LabError(Exception):
    """Base class for every error raised by the lab."""


class ValidationError(LabError, ValueError):
    """A parameter, config field or input array is invalid."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(LabError, ValueError):
    """A point lies outside the domain a mapping or grid is defined on."""


class UnsupportedSchemeError(LabError):
    """The requested differentiation scheme is not available for a mapping family."""


class NoClosedFormInverseError(LabError):
    """The mapping family has no closed-form inverse."""


class DegenerateDomainError(LabError):
    """No quadrature cell survives sampling and singular-point exclusion."""


class ResolutionError(LabError):
    """The grid is too coarse to represent a rasterized set faithfully."""


class ConvergenceError(LabError):
    """The capacity solver exhausted its iteration budget.

    :param partial: the CapacityResult reached before giving up.
    """

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)
