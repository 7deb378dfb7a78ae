"""Choosing the M = dim P_m triangles that carry the exact histopolation conditions.

Three strategies are available:

- ``padua``: attach each Padua point to the first triangle (in list order) that
  contains it.
- ``fekete``: greedy determinant maximization via column-pivoted QR of W^T.
- ``leja``: nested greedy sequence via row-pivoted LU of W.

W is the N x M matrix of triangle averages of the degree-m basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.spatial.distance import pdist

from basis import CHEBYSHEV, TotalDegreeBasis
from geometry import DEFAULT_MEMBERSHIP_TOL, contains_point_many, max_edge_length
from histopolation_errors import (
    AttributionNotInjective,
    InvalidMesh,
    PointUnassigned,
    RankDeficient,
)
from linalg_utils import condition_estimate, lu_partial_pivot, qr_column_pivot, warn_if_ill_conditioned
from mesh import Triangulation, require_mesh
from quadrature import moment_matrix

PADUA = "padua"
FEKETE = "fekete"
LEJA = "leja"
METHODS = (PADUA, FEKETE, LEJA)

DEFAULT_PIVOT_TOL = 1e-12
_INTEGER_SNAP = 1e-9


@dataclass(frozen=True)
class PaduaConfig:
    # alpha only enters the stability theory; extraction does not use it
    alpha: float = 0.5
    tol: float = DEFAULT_MEMBERSHIP_TOL

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.tol < 0.0:
            raise ValueError(f"membership tolerance must be non-negative, got {self.tol}")


@dataclass
class SelectionResult:
    method: str
    indices: list[int]
    degree: int
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.indices)


def padua_points(m: int) -> np.ndarray:
    """Padua points of degree m, shape (dim P_m, 2), in (i, j) lexicographic order.

    Point (i, j), 0 <= i + j <= m, is
    ((-1)^(i+j) cos(pi j / (m + 1)), (-1)^(i+j) cos(pi i / m)).
    """
    if m < 1:
        raise ValueError(f"Padua points need m >= 1, got {m}")
    points = []
    for i in range(m + 1):
        for j in range(m + 1 - i):
            sign = -1.0 if (i + j) % 2 else 1.0
            points.append((sign * math.cos(math.pi * j / (m + 1)), sign * math.cos(math.pi * i / m)))
    return np.array(points)


def min_padua_distance(m: int) -> float:
    """Smallest distance between two Padua points of degree m."""
    return float(pdist(padua_points(m)).min())


def _largest_integer_below(bound: float) -> int:
    nearest = round(bound)
    if abs(bound - nearest) < _INTEGER_SNAP:
        m = nearest - 1
    else:
        m = math.ceil(bound) - 1
    return max(int(m), 0)


def max_admissible_degree(h_max: float) -> int:
    """Largest m with m < pi / arccos(1 - sqrt(h_max^2 / 2)) - 1, or 0.

    Up to this degree every Padua triangle holds exactly one Padua point.
    """
    if not 0.0 < h_max < math.sqrt(2.0):
        raise InvalidMesh(f"h_max must lie in (0, sqrt(2)), got {h_max}")
    c = 1.0 - math.sqrt(h_max * h_max / 2.0)
    return _largest_integer_below(math.pi / math.acos(c) - 1.0)


def fk_max_degree(n: int) -> int:
    """max_admissible_degree for friedrichs_keller(n), where h_max = 2 sqrt(2) / n."""
    if n < 3:
        raise InvalidMesh(f"Friedrichs-Keller admissible degree needs n >= 3, got {n}")
    return _largest_integer_below(math.pi / math.acos((n - 2) / n) - 1.0)


def mesh_max_degree(tri: Triangulation) -> int:
    return max_admissible_degree(max_edge_length(require_mesh(tri)))


def padua_attribution(tri: Triangulation, m: int, tol: float = DEFAULT_MEMBERSHIP_TOL) -> list[int | None]:
    """Triangle index of the first triangle containing each Padua point, None if none does."""
    require_mesh(tri)
    attribution: list[int | None] = []
    for p in padua_points(m):
        hits = np.flatnonzero(contains_point_many(tri.vertices, tri.triangles, p, tol))
        attribution.append(int(hits[0]) if hits.size else None)
    return attribution


def _square_condition(tri: Triangulation, indices: list[int], basis: TotalDegreeBasis) -> float:
    cond = condition_estimate(moment_matrix(tri, indices, basis).entries)
    warn_if_ill_conditioned(cond, "selected Vandermonde matrix")
    return cond


def extract_padua(tri: Triangulation, m: int, cfg: PaduaConfig | None = None, kind: str = CHEBYSHEV) -> SelectionResult:
    cfg = cfg or PaduaConfig()
    require_mesh(tri)
    points = padua_points(m)
    owners: dict[int, int] = {}
    attribution: dict[int, int] = {}

    for k, p in enumerate(points):
        hits = np.flatnonzero(contains_point_many(tri.vertices, tri.triangles, p, cfg.tol))
        if not hits.size:
            raise PointUnassigned(f"Padua point {k} at ({p[0]:.6g}, {p[1]:.6g}) lies in no triangle", point_index=k)
        t = int(hits[0])
        if t in owners:
            raise AttributionNotInjective(
                f"Padua points {owners[t]} and {k} both fall in triangle {t}",
                attribution=attribution,
            )
        owners[t] = k
        attribution[k] = t

    indices = [attribution[k] for k in range(len(points))]
    logging.debug(f"Padua extraction m={m}: {len(indices)} triangles out of {tri.n_triangles}")
    basis = TotalDegreeBasis(m, kind)
    diagnostics = {
        "attribution": indices,
        "condition": _square_condition(tri, indices, basis),
    }
    return SelectionResult(PADUA, indices, m, diagnostics)


def _resolve_basis(m: int, basis: TotalDegreeBasis | None) -> TotalDegreeBasis:
    if basis is None:
        return TotalDegreeBasis(m)
    if basis.degree < m:
        raise ValueError(f"basis of degree {basis.degree} cannot span P_{m}")
    return basis.prefix(m)


def _check_pivots(method: str, pivots: np.ndarray, n_required: int, tol: float) -> None:
    if len(pivots) < n_required or pivots[0] == 0.0:
        raise RankDeficient(f"{method}: selection cannot span the polynomial space", pivots=pivots)
    small = np.flatnonzero(pivots[:n_required] < tol * pivots[0])
    if small.size:
        k = int(small[0])
        raise RankDeficient(
            f"{method}: pivot {k} is {pivots[k]:.3e}, below {tol:g} x {pivots[0]:.3e}",
            pivots=pivots,
        )


def _require_enough_triangles(tri: Triangulation, n_required: int, method: str) -> None:
    require_mesh(tri)
    if tri.n_triangles < n_required:
        raise RankDeficient(f"{method}: {tri.n_triangles} triangles cannot carry {n_required} conditions")


def extract_fekete(
    tri: Triangulation,
    m: int,
    basis: TotalDegreeBasis | None = None,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
) -> SelectionResult:
    basis = _resolve_basis(m, basis)
    n_required = len(basis)
    _require_enough_triangles(tri, n_required, FEKETE)

    W = moment_matrix(tri, None, basis).entries
    qr = qr_column_pivot(W.T)
    _check_pivots(FEKETE, qr.diagonal, n_required, pivot_tol)

    indices = [int(i) for i in qr.perm[:n_required]]
    pivots = qr.diagonal[:n_required]
    logging.debug(f"Fekete extraction m={m}: pivot ratio {pivots[-1] / pivots[0]:.3e}")
    diagnostics = {
        "pivots": pivots.tolist(),
        "condition": _square_condition(tri, indices, basis),
    }
    return SelectionResult(FEKETE, indices, m, diagnostics)


def extract_leja(
    tri: Triangulation,
    m: int,
    basis: TotalDegreeBasis | None = None,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
) -> SelectionResult:
    basis = _resolve_basis(m, basis)
    n_required = len(basis)
    _require_enough_triangles(tri, n_required, LEJA)

    W = moment_matrix(tri, None, basis).entries
    lu = lu_partial_pivot(W)
    _check_pivots(LEJA, lu.pivots, n_required, pivot_tol)

    indices = [int(i) for i in lu.perm[:n_required]]
    pivots = lu.pivots[:n_required]
    logging.debug(f"Leja extraction m={m}: pivot ratio {pivots[-1] / pivots[0]:.3e}")
    diagnostics = {
        "pivots": pivots.tolist(),
        "condition": _square_condition(tri, indices, basis),
    }
    return SelectionResult(LEJA, indices, m, diagnostics)


def select(
    tri: Triangulation,
    method: str,
    m: int,
    *,
    kind: str = CHEBYSHEV,
    padua: PaduaConfig | None = None,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
) -> SelectionResult:
    if m < 0:
        raise ValueError(f"degree must be non-negative, got {m}")
    if method == PADUA:
        return extract_padua(tri, m, padua, kind=kind)
    if method == FEKETE:
        return extract_fekete(tri, m, TotalDegreeBasis(m, kind), pivot_tol)
    if method == LEJA:
        return extract_leja(tri, m, TotalDegreeBasis(m, kind), pivot_tol)
    raise ValueError(f"unknown selection method {method!r}; expected one of {', '.join(METHODS)}")


