"""Triangle quadrature and assembly of triangle-average (moment) matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from basis import TotalDegreeBasis, basis_matrix
from geometry import DEGENERACY_FACTOR, TriangleGeom, bounding_box_scale, require_nondegenerate
from histopolation_errors import DegenerateTriangle
from mesh import Triangulation

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

ROW_CHUNK = 512


@dataclass(frozen=True)
class TriangleRule:
    """Barycentric nodes (Q, 3) with mean-value weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _gauss_unit_interval(npoints: int) -> tuple[np.ndarray, np.ndarray]:
    points, weights = leggauss(npoints)
    return (points + 1.0) / 2.0, weights / 2.0


@lru_cache(maxsize=None)
def triangle_rule(q: int) -> TriangleRule:
    """Collapsed (Duffy) tensor Gauss-Legendre rule exact for total degree q.

    The collapse adds one degree in the first variable, so both factors use
    ceil((q + 2) / 2) points.
    """
    if q < 0:
        raise ValueError(f"rule degree must be non-negative, got {q}")
    npoints = math.ceil((q + 2) / 2)
    s, ws = _gauss_unit_interval(npoints)
    t, wt = _gauss_unit_interval(npoints)

    # reference triangle (0,0), (1,0), (0,1): x = s, y = t (1 - s)
    x = np.repeat(s, npoints)
    y = np.tile(t, npoints) * (1.0 - x)
    weights = np.outer(ws * (1.0 - s), wt).ravel()
    weights = weights / weights.sum()

    nodes = np.column_stack([1.0 - x - y, x, y])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return TriangleRule(nodes=nodes, weights=weights, exact_degree=2 * npoints - 2)


def _map_nodes(rule: TriangleRule, corners: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Physical node coordinates for corners of shape (R, 3, 2); returns x, y of shape (R, Q)."""
    pts = np.einsum("qk,rkd->rqd", rule.nodes, corners)
    return pts[..., 0], pts[..., 1]


def average(f: Field, t: TriangleGeom, rule: TriangleRule) -> float:
    """Mean value of f over t under the rule."""
    require_nondegenerate(t)
    x, y = _map_nodes(rule, np.asarray(t, dtype=float)[None])
    return float(np.broadcast_to(np.asarray(f(x[0], y[0]), dtype=float), x[0].shape) @ rule.weights)


def _check_rows(tri: Triangulation, rows: np.ndarray) -> None:
    areas = tri.areas[rows]
    scale = bounding_box_scale(tri.vertices)
    bad = np.flatnonzero(areas <= DEGENERACY_FACTOR * scale * scale)
    if bad.size:
        i = int(rows[bad[0]])
        raise DegenerateTriangle(f"triangle {i} is degenerate", area=float(tri.areas[i]))


def averages(f: Field, tri: Triangulation, rows: Sequence[int] | None, rule: TriangleRule) -> np.ndarray:
    """mu_i(f) for the listed triangles (all triangles when rows is None)."""
    rows = np.arange(tri.n_triangles) if rows is None else np.asarray(rows, dtype=np.int64)
    _check_rows(tri, rows)
    out = np.empty(len(rows))
    for start in range(0, len(rows), ROW_CHUNK):
        block = rows[start:start + ROW_CHUNK]
        x, y = _map_nodes(rule, tri.corners(block))
        out[start:start + len(block)] = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape) @ rule.weights
    return out


@dataclass(frozen=True)
class MomentMatrix:
    """Triangle averages of basis polynomials: entries[i, j] = mu_{rows[i]}(p_j)."""

    entries: np.ndarray
    rows: tuple[int, ...]
    basis: TotalDegreeBasis

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def take_rows(self, k: int) -> "MomentMatrix":
        """The leading k rows."""
        return MomentMatrix(self.entries[:k], self.rows[:k], self.basis)

    def take_columns(self, basis: TotalDegreeBasis) -> "MomentMatrix":
        """Restrict to a leading sub-basis (graded prefix)."""
        return MomentMatrix(self.entries[:, :len(basis)], self.rows, basis)


def moment_matrix(
    tri: Triangulation,
    rows: Sequence[int] | None,
    basis: TotalDegreeBasis,
    rule: TriangleRule | None = None,
) -> MomentMatrix:
    """W[i, j] = mu_i(p_j), rows in the given order.

    The default rule is exact for the basis degree, so the entries carry no
    quadrature error.
    """
    rule = rule or triangle_rule(basis.degree)
    rows = np.arange(tri.n_triangles) if rows is None else np.asarray(rows, dtype=np.int64)
    _check_rows(tri, rows)
    entries = np.empty((len(rows), len(basis)))
    for start in range(0, len(rows), ROW_CHUNK):
        block = rows[start:start + ROW_CHUNK]
        x, y = _map_nodes(rule, tri.corners(block))
        values = basis_matrix(basis, x, y)  # (R, Q, D)
        entries[start:start + len(block)] = np.einsum("rqd,q->rd", values, rule.weights)
    return MomentMatrix(entries=entries, rows=tuple(int(r) for r in rows), basis=basis)


def monomial_average_exact(a: int, b: int, t: TriangleGeom) -> float:
    """Closed-form mean of x^a y^b over t.

    Expands x = x1 + s (x2 - x1) + u (x3 - x1), same for y, and integrates each
    monomial s^i u^j over the reference simplex with i! j! / (i + j + 2)!,
    the result scaled by 2 to become a mean.
    """
    (x1, y1), (x2, y2), (x3, y3) = t
    total = 0.0
    for i1 in range(a + 1):
        for j1 in range(a - i1 + 1):
            k1 = a - i1 - j1
            cx = math.factorial(a) // (math.factorial(i1) * math.factorial(j1) * math.factorial(k1))
            cx *= (x2 - x1) ** i1 * (x3 - x1) ** j1 * x1 ** k1
            for i2 in range(b + 1):
                for j2 in range(b - i2 + 1):
                    k2 = b - i2 - j2
                    cy = math.factorial(b) // (math.factorial(i2) * math.factorial(j2) * math.factorial(k2))
                    cy *= (y2 - y1) ** i2 * (y3 - y1) ** j2 * y1 ** k2
                    i, j = i1 + i2, j1 + j2
                    simplex = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
                    total += cx * cy * simplex
    return 2.0 * total
