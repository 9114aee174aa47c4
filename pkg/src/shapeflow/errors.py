"""Exception hierarchy shared by all shapeflow modules."""


class ShapeflowError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(ShapeflowError, ValueError):
    pass


class DegenerateGeometry(ShapeflowError, ValueError):
    """Contour or mesh geometry violates a structural invariant."""


class MeshQualityFailure(ShapeflowError):
    pass


class IncompatibleData(ShapeflowError, ValueError):
    """Neumann data does not satisfy the discrete compatibility condition."""


class SolverFailure(ShapeflowError, ArithmeticError):
    pass


class OutOfDomain(ShapeflowError):
    """A point to be evaluated lies farther than one mesh size from the domain."""


class GeodesicBreakdown(ShapeflowError):
    """Shooting produced a non-simple contour."""


class FormatError(ShapeflowError, ValueError):
    """Input file or directory is malformed."""
