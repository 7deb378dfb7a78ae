"""Exceptions raised by the histopolation modules.

The CLI maps ``MeshError`` to exit code 1 (bad input) and the numerical
families (``GeometryError``, ``SelectionError``, ``SolveError``) to exit code 2.
"""

from __future__ import annotations

from typing import Any


class HistopolationError(Exception):
    """Root of every error raised by this package."""


class GeometryError(HistopolationError):
    pass


class DegenerateTriangle(GeometryError):
    def __init__(self, message: str, area: float | None = None):
        super().__init__(message)
        self.area = area


class MeshError(HistopolationError):
    pass


class EmptyMesh(MeshError):
    pass


class InvalidMesh(MeshError):
    pass


class ParseError(MeshError):
    pass


class ValidationError(MeshError):
    pass


class SelectionError(HistopolationError):
    pass


class AttributionNotInjective(SelectionError):
    """Two Padua points were attributed to the same triangle."""

    def __init__(self, message: str, attribution: dict[int, int] | None = None):
        super().__init__(message)
        # point index -> triangle index, as far as the scan got
        self.attribution = attribution or {}


class PointUnassigned(SelectionError):
    """A Padua point lies in no triangle of the mesh."""

    def __init__(self, message: str, point_index: int | None = None):
        super().__init__(message)
        self.point_index = point_index


class RankDeficient(SelectionError):
    def __init__(self, message: str, pivots: Any = None):
        super().__init__(message)
        self.pivots = pivots


class SolveError(HistopolationError):
    pass


class SingularSystem(SolveError):
    pass


class SingularKKT(SingularSystem):
    pass


class RankDeficientConstraints(SolveError):
    pass


class RankDeficientDesign(SolveError):
    pass


class DimensionMismatch(SolveError):
    pass
