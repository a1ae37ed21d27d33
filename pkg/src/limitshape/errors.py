"""Error hierarchy with exit codes, and source spans for config diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


#1-based line/column inside a config file; ordered so spans can take min/max
@dataclass(frozen=True, slots=True, order=True)
class SourceLocation:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


#half-open range [start, end) of config text
@dataclass(frozen=True, slots=True)
class SourceSpan:
    start: SourceLocation
    end: SourceLocation

    def merge(self, other: SourceSpan) -> SourceSpan:
        return SourceSpan(start=min(self.start, other.start), end=max(self.end, other.end))

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"


#normalizes the base exception for every layer; exit_code feeds the CLI
class LimitShapeError(Exception):
    """Base class for limitshape errors."""

    exit_code = 4


#config-layer errors all exit with status 1 and may carry a span
class ConfigError(LimitShapeError):
    """Raised when a config document is well-formed but invalid."""

    exit_code = 1

    def __init__(self, message: str, span: Optional[SourceSpan] = None) -> None:
        super().__init__(message)
        self.span = span
        self.message = message

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span.start}: {self.message}"


#lexer raises this when encountering invalid characters in a config file
class ConfigLexError(ConfigError):
    """Raised when the config lexer encounters an invalid character sequence."""


#parser uses this to surface syntax errors with spans
class ConfigParseError(ConfigError):
    """Raised when the config parser encounters an invalid construct."""


#boundary data violating the support inequality on some boundary pair
class Inadmissible(LimitShapeError):
    """Raised when boundary data admits no extension with gradient in N."""

    exit_code = 2

    def __init__(self, message: str, y1=None, y2=None, slack: float = float("nan")) -> None:
        super().__init__(message)
        self.y1 = None if y1 is None else np.asarray(y1, dtype=float)
        self.y2 = None if y2 is None else np.asarray(y2, dtype=float)
        self.slack = float(slack)


#iterative procedures that hit their caps report where they stopped
class NonConvergence(LimitShapeError):
    """Raised when an iteration cap is reached before the tolerance."""

    exit_code = 3

    def __init__(self, message: str, stage: int = 0, iterations: int = 0, residual: float = float("nan")) -> None:
        super().__init__(message)
        self.stage = stage
        self.iterations = iterations
        self.residual = float(residual)


class InvalidPolygon(LimitShapeError):
    """Raised for constraint polygons that are not strictly convex."""


class SingularPoint(LimitShapeError):
    """Raised when second derivatives are requested too close to a singular point."""


class OutsideDomain(LimitShapeError):
    """Raised when a tension model is evaluated outside its polygon."""


class MalformedBoundary(LimitShapeError):
    """Raised for open, degenerate, or self-intersecting boundary polylines."""


class MeshDegenerate(LimitShapeError):
    """Raised when a mesh has non-positive triangle areas or dangling nodes."""


class MeshMismatch(LimitShapeError):
    """Raised when two fields cannot be brought onto a common mesh."""


class WindowOutsideDomain(LimitShapeError):
    """Raised when a diagnostic window is not compactly inside the domain."""


class TooLarge(LimitShapeError):
    """Raised when exact enumeration is asked for too many free sites."""


class InadmissibleBoundary(LimitShapeError):
    """Raised when lattice boundary heights extend to no stepped surface."""


__all__ = [
    "ConfigError",
    "ConfigLexError",
    "ConfigParseError",
    "Inadmissible",
    "InadmissibleBoundary",
    "InvalidPolygon",
    "LimitShapeError",
    "MalformedBoundary",
    "MeshDegenerate",
    "MeshMismatch",
    "NonConvergence",
    "OutsideDomain",
    "SingularPoint",
    "SourceLocation",
    "SourceSpan",
    "TooLarge",
    "WindowOutsideDomain",
]
