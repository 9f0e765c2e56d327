"""Exception types raised by the library."""


class CATRError(Exception):
    """Base class for all library errors."""


class InvalidGeometryError(CATRError, ValueError):
    pass


class DegenerateGeometryError(CATRError, ValueError):
    pass


class OutOfStrokeError(CATRError, ValueError):
    pass


class OutOfBoundsError(CATRError, ValueError):
    pass


class GridTooSmallError(CATRError, ValueError):
    pass


class InfeasibleBoundsError(CATRError, ValueError):
    pass


class EmptyVoxelError(CATRError, LookupError):
    pass


class ConfigError(CATRError, ValueError):
    """Configuration failed to parse or validate; message names the field."""
