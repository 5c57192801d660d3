"""Exception hierarchy.

Every error raised by the library derives from :class:`OrbitfixError` so
callers (and the CLI) can map failures to machine-readable categories.
"""


class OrbitfixError(Exception):
    """Base class for all library errors."""


class ConfigError(OrbitfixError):
    """Invalid scenario configuration or constellation specification."""


class GeometryError(OrbitfixError):
    """Degenerate geometry (coincident points, zero-length vectors, ...)."""


class InsufficientGeometryError(GeometryError):
    """Not enough visible satellites for the requested operation."""


class NumericError(OrbitfixError):
    """Numerical failure: divergent iteration, singular normal matrix, ..."""


class ConvergenceError(NumericError):
    """Iterative solver did not converge.

    The last iterate is attached as ``estimate`` so callers can inspect it.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ResourceLimitError(OrbitfixError):
    """A guarded search exceeded its configured resource cap."""
