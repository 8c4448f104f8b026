"""Exception types shared across the package."""


class MeshCrackError(Exception):
    """Base class for all package errors."""


class DimensionError(MeshCrackError, ValueError):
    """Two inputs that must share a shape do not."""


class ParameterError(MeshCrackError, ValueError):
    """A numeric parameter is outside its valid range."""


class EmptyObjectError(MeshCrackError, ValueError):
    """No foreground pixel was found when locating the rendered object."""


class UndefinedCorrelationError(MeshCrackError, ValueError):
    """A correlation was requested on a constant vector."""


class FitError(MeshCrackError, RuntimeError):
    """The logistic mapping could not be fitted.

    ``fallback`` holds the initial parameter guess so callers can still
    produce a mapped prediction if they choose to.
    """

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback
