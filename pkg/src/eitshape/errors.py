"""Exception types shared across the package."""


class EitShapeError(Exception):
    """Base class for all package-specific errors."""


class InvalidResolutionError(EitShapeError, ValueError):
    """Mesh resolution is not a valid grid count."""


class GeometryError(EitShapeError, ValueError):
    """Invalid geometric input (segment off the boundary, bad polygon, ...)."""


class OutOfDomainError(EitShapeError, ValueError):
    """A point lies outside the closed unit square."""


class ContainmentError(EitShapeError, ValueError):
    """An inclusion primitive touches or leaves the open unit square."""


class InvalidParameterError(EitShapeError, ValueError):
    """A physical or algorithmic parameter is out of range."""


class SolverError(EitShapeError, RuntimeError):
    """Linear solver failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InterfaceContactError(EitShapeError, ValueError):
    """A measurement point lies on the inclusion interface."""


class DegenerateFitError(EitShapeError, ValueError):
    """A current already matches its data exactly; weight undefined."""


class ConfigError(EitShapeError, ValueError):
    """Malformed or inconsistent configuration."""


class DataMismatchError(EitShapeError, ValueError):
    """A measurement file is inconsistent with the configuration."""
