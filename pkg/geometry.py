"""Planar triangle primitives: areas, barycentric coordinates, membership."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from histopolation_errors import DegenerateTriangle, EmptyMesh

DEGENERACY_FACTOR = 1e-14
DEFAULT_MEMBERSHIP_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class TriangleGeom(NamedTuple):
    v1: Point2
    v2: Point2
    v3: Point2

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3], dtype=float)


def signed_area(a, b, c) -> float:
    """Half the cross product (b - a) x (c - a); positive for counter-clockwise input."""
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def bounding_box_scale(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    extent = pts.max(axis=0) - pts.min(axis=0)
    return float(extent.max())


def is_degenerate(t: TriangleGeom) -> bool:
    scale = bounding_box_scale(t)
    return abs(signed_area(*t)) <= DEGENERACY_FACTOR * scale * scale


def require_nondegenerate(t: TriangleGeom) -> float:
    area = signed_area(*t)
    scale = bounding_box_scale(t)
    if abs(area) <= DEGENERACY_FACTOR * scale * scale:
        raise DegenerateTriangle(f"Triangle {tuple(t)} has area {area:.3e}", area=area)
    return area


def barycentric(p, t: TriangleGeom) -> tuple[float, float, float]:
    """Barycentric coordinates of p with respect to t, from cross-product ratios."""
    v1, v2, v3 = t
    require_nondegenerate(t)
    # (v1 - v3) x (v2 - v3)
    denom = (v1[0] - v3[0]) * (v2[1] - v3[1]) - (v1[1] - v3[1]) * (v2[0] - v3[0])
    l1 = ((p[0] - v3[0]) * (v2[1] - v3[1]) - (p[1] - v3[1]) * (v2[0] - v3[0])) / denom
    l2 = ((p[0] - v3[0]) * (v3[1] - v1[1]) - (p[1] - v3[1]) * (v3[0] - v1[0])) / denom
    l3 = ((p[0] - v1[0]) * (v1[1] - v2[1]) - (p[1] - v1[1]) * (v1[0] - v2[0])) / denom
    return l1, l2, l3


def contains_point(t: TriangleGeom, p, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
    """Area-sum membership test, inclusive of edges and vertices.

    p is inside t iff |t| = |t^1| + |t^2| + |t^3|, where t^j is t with vertex j
    replaced by p, up to tol * |t|.
    """
    v1, v2, v3 = t
    whole = abs(signed_area(v1, v2, v3))
    parts = abs(signed_area(p, v2, v3)) + abs(signed_area(v1, p, v3)) + abs(signed_area(v1, v2, p))
    return parts - whole <= tol * whole


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Vectorized signed_area over an index array of shape (N, 3)."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def contains_point_many(
    vertices: np.ndarray, triangles: np.ndarray, p, tol: float = DEFAULT_MEMBERSHIP_TOL
) -> np.ndarray:
    """Boolean mask over triangles: the area-sum test of contains_point for one point."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    px, py = float(p[0]), float(p[1])

    def _area(u, v, w):
        return 0.5 * np.abs((v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1])
                            - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0]))

    q = np.broadcast_to(np.array([px, py]), a.shape)
    whole = _area(a, b, c)
    parts = _area(q, b, c) + _area(a, q, c) + _area(a, b, q)
    return parts - whole <= tol * whole


def barycentric_many(vertices: np.ndarray, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of every point against every triangle, shape (P, N, 3)."""
    v1 = vertices[triangles[:, 0]][None, :, :]
    v2 = vertices[triangles[:, 1]][None, :, :]
    v3 = vertices[triangles[:, 2]][None, :, :]
    p = np.asarray(points, dtype=float)[:, None, :]
    denom = (v1[..., 0] - v3[..., 0]) * (v2[..., 1] - v3[..., 1]) - (v1[..., 1] - v3[..., 1]) * (v2[..., 0] - v3[..., 0])
    l1 = ((p[..., 0] - v3[..., 0]) * (v2[..., 1] - v3[..., 1]) - (p[..., 1] - v3[..., 1]) * (v2[..., 0] - v3[..., 0])) / denom
    l2 = ((p[..., 0] - v3[..., 0]) * (v3[..., 1] - v1[..., 1]) - (p[..., 1] - v3[..., 1]) * (v3[..., 0] - v1[..., 0])) / denom
    return np.stack([l1, l2, 1.0 - l1 - l2], axis=-1)


def max_edge_length(tri) -> float:
    """h_max: the longest edge over all triangles of the mesh."""
    if tri.n_triangles == 0:
        raise EmptyMesh("Cannot compute h_max of an empty triangulation")
    corners = tri.vertices[tri.triangles]  # (N, 3, 2)
    edges = corners - np.roll(corners, -1, axis=1)
    return float(np.sqrt((edges ** 2).sum(axis=-1)).max())
