"""Exception hierarchy shared by every module and mapped to CLI exit codes."""

from typing import Optional


class TopoLidarError(ValueError):
    """Root of all data errors raised by the library (CLI exit code 2)."""


class GeometryError(TopoLidarError):
    pass


class ShapeMismatchError(TopoLidarError):
    pass


class MetricError(TopoLidarError):
    pass


class AlignmentError(TopoLidarError):
    pass


class DegenerateAlignmentError(AlignmentError):
    pass


class PairGenError(TopoLidarError):
    pass


class FormatError(TopoLidarError):
    pass


class OptimizationError(TopoLidarError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
