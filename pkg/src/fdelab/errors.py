"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that only care about
"bad argument" can catch that; numerical failures derive from
``RuntimeError``.
"""


class FDELabError(Exception):
    """Base class for every error raised by fdelab."""


# -- model ------------------------------------------------------------------
class DimensionTooSmall(FDELabError, ValueError):
    pass


class ExponentOutOfRange(FDELabError, ValueError):
    pass


class NonpositiveFloor(FDELabError, ValueError):
    pass


# -- mesh -------------------------------------------------------------------
class InvalidRadii(FDELabError, ValueError):
    pass


class GradingTooCoarse(FDELabError, ValueError):
    pass


class RangeOutsideMesh(FDELabError, ValueError):
    pass


class PointsTooClose(FDELabError, ValueError):
    pass


class PointOnBoundary(FDELabError, ValueError):
    pass


# -- profiles ---------------------------------------------------------------
class GammaOutOfRange(FDELabError, ValueError):
    pass


class Delta1TooLarge(FDELabError, ValueError):
    pass


class SpecParityEmpty(FDELabError, ValueError):
    pass


class RadiiNotDecreasing(FDELabError, ValueError):
    pass


# -- solvers ----------------------------------------------------------------
class NewtonDiverged(FDELabError, RuntimeError):
    """Newton failed for this dt; the caller should retry with dt/2."""


class PositivityLost(FDELabError, RuntimeError):
    pass


class StepFloorReached(FDELabError, RuntimeError):
    pass


class StabilityViolation(FDELabError, ValueError):
    pass


# -- analysis ---------------------------------------------------------------
class WindowTooSmall(FDELabError, ValueError):
    pass


class NonpositiveField(FDELabError, ValueError):
    pass


class CutoffSingular(FDELabError, ValueError):
    pass


class InsufficientSnapshots(FDELabError, ValueError):
    pass


class MeshMismatch(FDELabError, ValueError):
    pass


class DegenerateAnnulus(FDELabError, ValueError):
    pass


# -- configuration ----------------------------------------------------------
class ConfigParseError(FDELabError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ConfigValidationError(FDELabError, ValueError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")
