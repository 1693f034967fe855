"""
Legalizer Errors
----------------
Description: Exception hierarchy shared by every feature of the legalizer
Dependencies: none
"""

from typing import Optional


class LegalizerError(Exception):
    """Root of every error raised by the legalizer."""


class EmptyPlacement(LegalizerError, ValueError):
    """Raised when a metric needs movable cells and there are none."""


class NoLegalRow(LegalizerError, ValueError):
    """Raised when no row satisfies a cell's rail and height constraints."""


class Exhausted(LegalizerError):
    """Raised when the target order has no cells left."""


class EmptyRegion(LegalizerError):
    """Raised when a window contains no usable segment."""


class FallbackRequired(LegalizerError):
    """Raised when window expansion is exhausted for a target."""


class OutOfSegment(LegalizerError, ValueError):
    """Raised when a trial footprint leaves one of its segments."""


class RailMismatch(LegalizerError, ValueError):
    """Raised when a trial row does not match the target's rail."""


class SegmentOverflow(LegalizerError):
    """Raised when pushed cells would cross a segment boundary."""


class EmptyCurve(LegalizerError, ValueError):
    """Raised when a breakpoint pipeline receives no breakpoints."""


class NoFeasiblePoint(LegalizerError):
    """Raised when a region has no feasible insertion point."""


class SnapInfeasible(LegalizerError):
    """Raised when snapping a committed insertion leaves an overlap."""


class Unlegalizable(LegalizerError):
    """Raised when even the greedy fallback finds no slot for a cell."""


class InfeasibleSpec(LegalizerError, ValueError):
    """Raised when a synthetic request cannot fit its grid."""


class ConfigError(LegalizerError, ValueError):
    """Raised when configuration values fail validation."""


class PlacementFileError(LegalizerError, ValueError):
    """Base for placement file diagnostics with a source location."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class FormatSyntaxError(PlacementFileError):
    """Malformed line: unknown keyword, wrong token count, bad number."""


class SemanticError(PlacementFileError):
    """Well-formed line whose values are not acceptable."""


class DuplicateIdError(PlacementFileError):
    """Two cells share a name or id."""
