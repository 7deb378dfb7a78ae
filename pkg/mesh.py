"""Triangulations of [-1, 1]^2: generation, JSON file I/O and validation.

Mesh file format (UTF-8 JSON, unknown keys ignored)::

    {"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}

with 0-based triangle indices.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Any, Sequence

import numpy as np

from data_io import dump_json
from geometry import (
    DEGENERACY_FACTOR,
    Point2,
    TriangleGeom,
    barycentric_many,
    bounding_box_scale,
    max_edge_length,
    signed_areas,
)
from histopolation_errors import EmptyMesh, ParseError, ValidationError

MIN_CELL_WIDTH = 1e-6
DISJOINTNESS_CHECK_LIMIT = 5000
_INTERIOR_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Vertex coordinates (V, 2) and 0-based triangle index triples (N, 3)."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float).reshape(-1, 2)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Triangulation):
            return NotImplemented
        return (
            self.vertices.shape == other.vertices.shape
            and self.triangles.shape == other.triangles.shape
            and bool(np.array_equal(self.vertices, other.vertices))
            and bool(np.array_equal(self.triangles, other.triangles))
        )

    __hash__ = None

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    def __len__(self) -> int:
        return self.n_triangles

    @cached_property
    def areas(self) -> np.ndarray:
        return np.abs(signed_areas(self.vertices, self.triangles))

    @cached_property
    def domain_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def corners(self, rows: Sequence[int] | np.ndarray | None = None) -> np.ndarray:
        """Vertex coordinates of the given triangles, shape (R, 3, 2)."""
        if rows is None:
            return self.vertices[self.triangles]
        return self.vertices[self.triangles[np.asarray(rows, dtype=np.int64)]]

    def triangle(self, i: int) -> TriangleGeom:
        v1, v2, v3 = (Point2(float(x), float(y)) for x, y in self.vertices[self.triangles[i]])
        return TriangleGeom(v1, v2, v3)

    def reordered(self, order: Sequence[int]) -> "Triangulation":
        """Same vertices, triangles listed in the given order."""
        return Triangulation(self.vertices, self.triangles[np.asarray(order, dtype=np.int64)], name=self.name)

    def subset(self, rows: Sequence[int]) -> "Triangulation":
        return self.reordered(rows)


def _grid_triangulation(xs: np.ndarray, ys: np.ndarray, name: str) -> Triangulation:
    """Split every cell of the tensor grid along its lower-left to upper-right diagonal.

    Vertex k = j * (nx + 1) + i sits at (xs[i], ys[j]). Cells are visited row by
    row from the bottom; each contributes its lower triangle, then its upper one,
    both counter-clockwise.
    """
    nx = len(xs) - 1
    ny = len(ys) - 1
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return Triangulation(vertices, triangles, name=name)


def friedrichs_keller(n: int) -> Triangulation:
    """Regular Friedrichs-Keller triangulation of [-1, 1]^2 with 2 n^2 triangles."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    axis = 2.0 * np.arange(n + 1) / n - 1.0
    tri = _grid_triangulation(axis, axis, name=f"fk-{n}")
    logging.debug(f"Built Friedrichs-Keller mesh n={n}: {tri.n_triangles} triangles")
    return tri


def _random_breakpoints(n: int, rng: np.random.Generator) -> np.ndarray:
    inner = np.sort(rng.uniform(-1.0, 1.0, size=n - 1))
    points = np.concatenate([[-1.0], inner, [1.0]])
    # clamp to the minimum cell width, sweeping from both ends
    for k in range(1, n):
        points[k] = max(points[k], points[k - 1] + MIN_CELL_WIDTH)
    for k in range(n - 1, 0, -1):
        points[k] = min(points[k], points[k + 1] - MIN_CELL_WIDTH)
    return points


def random_axes_fk(n: int, seed: int) -> Triangulation:
    """Friedrichs-Keller split of a grid with random, sorted axis breakpoints.

    Each axis gets n - 1 interior breakpoints drawn uniformly from (-1, 1);
    x breakpoints are drawn first, then y, from ``numpy.random.default_rng(seed)``.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    xs = _random_breakpoints(n, rng)
    ys = _random_breakpoints(n, rng)
    tri = _grid_triangulation(xs, ys, name=f"random-axes-{n}-{seed}")
    logging.debug(f"Built random-axes mesh n={n} seed={seed}: {tri.n_triangles} triangles")
    return tri


def _parse_payload(payload: Any) -> Triangulation:
    if not isinstance(payload, dict):
        raise ParseError("Mesh file must contain a JSON object")
    try:
        raw_vertices = payload["vertices"]
        raw_triangles = payload["triangles"]
    except KeyError as e:
        raise ParseError(f"Mesh file is missing the {e.args[0]!r} key") from None

    try:
        vertices = np.array(raw_vertices, dtype=float)
        triangles_f = np.array(raw_triangles, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"Mesh file has non-numeric entries: {e}") from None

    if vertices.size == 0:
        vertices = vertices.reshape(0, 2)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise ParseError(f"vertices must be a list of [x, y] pairs, got shape {vertices.shape}")
    if triangles_f.size == 0:
        triangles_f = triangles_f.reshape(0, 3)
    if triangles_f.ndim != 2 or triangles_f.shape[1] != 3:
        raise ParseError(f"triangles must be a list of [i, j, k] triples, got shape {triangles_f.shape}")
    if not np.all(np.isfinite(vertices)):
        raise ParseError("vertices must be finite")
    if not np.all(triangles_f == np.round(triangles_f)):
        raise ParseError("triangle indices must be integers")

    triangles = triangles_f.astype(np.int64)
    if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
        raise ValidationError(
            f"triangle index out of range [0, {len(vertices)}): "
            f"min {triangles.min()}, max {triangles.max()}"
        )
    tri = Triangulation(vertices, triangles)
    if tri.n_triangles:
        scale = bounding_box_scale(vertices)
        bad = np.flatnonzero(tri.areas <= DEGENERACY_FACTOR * scale * scale)
        if bad.size:
            raise ValidationError(f"{bad.size} degenerate triangle(s), first at index {int(bad[0])}")
    return tri


def load_mesh(stream: IO[str]) -> Triangulation:
    try:
        payload = json.load(stream)
    except json.JSONDecodeError as e:
        raise ParseError(f"Mesh file is not valid JSON: {e}") from None
    return _parse_payload(payload)


def save_mesh(tri: Triangulation, stream: IO[str]) -> None:
    dump_json(
        {
            "vertices": tri.vertices.tolist(),
            "triangles": tri.triangles.tolist(),
        },
        stream,
    )


def read_mesh(filepath: str | Path) -> Triangulation:
    with open(filepath, "r", encoding="utf-8") as fh:
        tri = load_mesh(fh)
    return Triangulation(tri.vertices, tri.triangles, name=Path(filepath).stem)


def write_mesh(filepath: str | Path, tri: Triangulation) -> None:
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        save_mesh(tri, fh)


@dataclass
class MeshDiagnostics:
    n_vertices: int
    n_triangles: int
    indices_valid: bool
    min_area: float = float("nan")
    area_sum: float = float("nan")
    h_max: float = float("nan")
    # None when the mesh is too large for the sampled check
    disjoint: bool | None = None
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.indices_valid and not self.issues


def _sample_points(corners: np.ndarray) -> np.ndarray:
    """Centroid plus three interior points per triangle, shape (R * 4, 2)."""
    weights = np.array(
        [
            [1 / 3, 1 / 3, 1 / 3],
            [0.6, 0.2, 0.2],
            [0.2, 0.6, 0.2],
            [0.2, 0.2, 0.6],
        ]
    )
    return np.einsum("sk,rkd->rsd", weights, corners).reshape(-1, 2)


def _interiors_disjoint(tri: Triangulation, chunk: int = 256) -> tuple[bool, str]:
    samples = _sample_points(tri.corners())
    for start in range(0, len(samples), chunk):
        block = samples[start:start + chunk]
        lam = barycentric_many(tri.vertices, tri.triangles, block)
        strictly_inside = np.all(lam > _INTERIOR_MARGIN, axis=-1).sum(axis=1)
        overlaps = np.flatnonzero(strictly_inside > 1)
        if overlaps.size:
            owner = (start + int(overlaps[0])) // 4
            return False, f"interior of triangle {owner} overlaps another triangle"
    return True, ""


def validate(tri: Triangulation, expected_area: float | None = 4.0) -> MeshDiagnostics:
    """Collect mesh health figures; failures land in ``issues`` instead of raising."""
    diag = MeshDiagnostics(
        n_vertices=tri.n_vertices,
        n_triangles=tri.n_triangles,
        indices_valid=True,
    )
    if tri.n_triangles == 0:
        diag.issues.append("mesh has no triangles")
        return diag

    if tri.triangles.min() < 0 or tri.triangles.max() >= tri.n_vertices:
        diag.indices_valid = False
        diag.issues.append("triangle index out of range")
        return diag

    areas = tri.areas
    diag.min_area = float(areas.min())
    diag.area_sum = float(areas.sum())
    diag.h_max = max_edge_length(tri)

    scale = bounding_box_scale(tri.vertices)
    if diag.min_area <= DEGENERACY_FACTOR * scale * scale:
        diag.issues.append(f"degenerate triangle with area {diag.min_area:.3e}")
    if expected_area is not None and abs(diag.area_sum - expected_area) > 1e-9:
        diag.issues.append(f"area sum {diag.area_sum!r} differs from {expected_area!r}")

    if tri.n_triangles <= DISJOINTNESS_CHECK_LIMIT:
        diag.disjoint, message = _interiors_disjoint(tri)
        if not diag.disjoint:
            diag.issues.append(message)
    else:
        logging.debug(f"Skipping disjointness check for {tri.n_triangles} triangles")

    return diag


def require_mesh(tri: Triangulation) -> Triangulation:
    if tri.n_triangles == 0:
        raise EmptyMesh("Triangulation has no triangles")
    return tri
