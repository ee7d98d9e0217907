"""
GCI Toolkit - Error Types
"""


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


# Spectrum geometry
class OriginInsideHull(ToolkitError, ValueError):
    """The origin lies inside or on the convex hull of the spectrum; GSI does not apply"""


class DegenerateSegment(ToolkitError, ValueError):
    """Segment endpoints coincide"""


class OriginOnSegment(ToolkitError, ValueError):
    """The segment passes through the origin"""


class NoValidCircle(ToolkitError, AssertionError):
    """No candidate circle encloses the polygon while excluding the origin"""


# Iteration schedules
class InvalidSegment(ToolkitError, ValueError):
    """Real segment [a, b] does not satisfy b > a > 0"""


class InvalidTriangle(ToolkitError, ValueError):
    """Triangle is degenerate at (1, 0) or its hull contains the origin"""


class InvalidSchedule(ToolkitError, ValueError):
    """Schedule parameters violate the schedule invariants"""


# Solvers
class ZeroMu(ToolkitError, ValueError):
    """GSI parameter mu is zero"""


class DimensionMismatch(ToolkitError, ValueError):
    """Vector length does not match the operator dimension"""


class InvalidSolveConfig(ToolkitError, ValueError):
    """Solve configuration out of range"""


# VSIE operator
class ZeroDistance(ToolkitError, ValueError):
    """Green's function evaluated at zero distance"""


class ZeroOffset(ToolkitError, ValueError):
    """Dyadic kernel evaluated at zero offset"""


class BodyOutsideGrid(ToolkitError, ValueError):
    """Body does not fit the voxel grid"""


class InvalidProfile(ToolkitError, ValueError):
    """Permittivity profile parameters are invalid"""


class NonTransverse(ToolkitError, ValueError):
    """Plane-wave polarization is not perpendicular to its direction"""


class ExportTooLarge(ToolkitError, ValueError):
    """Dense export requested above the configured size limit"""


# Spectral analysis
class NonSquare(ToolkitError, ValueError):
    """Matrix is not square"""


class ConvergenceFailure(ToolkitError, RuntimeError):
    """Dense eigensolver failed to converge"""


class InvalidRange(ToolkitError, ValueError):
    """Range [min, max] has min > max"""


# CLI
class ConfigSchemaError(ToolkitError, ValueError):
    """Experiment configuration failed validation"""
