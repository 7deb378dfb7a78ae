"""Lebesgue constants, Lagrange bases for averages and operator-norm bounds.

Everything is measured on a finite evaluation grid, so the reported Lebesgue
constants are lower bounds of the true ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from basis import CHEBYSHEV, TotalDegreeBasis, basis_matrix
from histopolation import elimination_factors, kkt_matrix
from histopolation_errors import DimensionMismatch, RankDeficientDesign
from linalg_utils import one_norm, solve
from mesh import Triangulation
from quadrature import MomentMatrix, moment_matrix
from selection import SelectionResult

UNIFORM = "uniform"
CHEBYSHEV_LOBATTO = "chebyshev_lobatto"
GRID_KINDS = (UNIFORM, CHEBYSHEV_LOBATTO)
DEFAULT_RESOLUTION = 101
GRID_CHUNK = 4096
GRID_BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True, eq=False)
class EvaluationGrid:
    kind: str
    resolution: int
    axis: np.ndarray

    @cached_property
    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.axis, self.axis)
        return np.column_stack([gx.ravel(), gy.ravel()])

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self) -> int:
        return self.resolution * self.resolution


def evaluation_grid(resolution: int = DEFAULT_RESOLUTION, kind: str = UNIFORM) -> EvaluationGrid:
    """Tensor grid on [-1, 1]^2. Odd resolutions contain the origin exactly."""
    if resolution < 2:
        raise ValueError(f"grid resolution must be at least 2, got {resolution}")
    if kind == UNIFORM:
        axis = np.linspace(-1.0, 1.0, resolution)
    elif kind == CHEBYSHEV_LOBATTO:
        axis = -np.cos(np.pi * np.arange(resolution) / (resolution - 1))
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    axis[0], axis[-1] = -1.0, 1.0
    if resolution % 2:
        axis[resolution // 2] = 0.0
    axis.setflags(write=False)
    return EvaluationGrid(kind, resolution, axis)


def lagrange_coefficients(V: MomentMatrix | np.ndarray) -> np.ndarray:
    """V^-1: column j holds the coefficients of the Lagrange polynomial of triangle j."""
    V = np.asarray(V.entries if isinstance(V, MomentMatrix) else V, dtype=float)
    return solve(V, np.eye(V.shape[0]))


def _row_one_norms(basis: TotalDegreeBasis, coeffs: np.ndarray, grid: EvaluationGrid) -> np.ndarray:
    """sum_j |sum_k p_k(xi) coeffs[k, j]| at every grid point."""
    points = grid.points
    out = np.empty(len(points))
    chunk = max(1, min(GRID_CHUNK, GRID_BLOCK_ENTRIES // max(coeffs.shape[1], 1)))
    for start in range(0, len(points), chunk):
        block = points[start:start + chunk]
        P = basis_matrix(basis, block[:, 0], block[:, 1])
        out[start:start + len(block)] = np.abs(P @ coeffs).sum(axis=1)
    return out


def _selection_matrix(selection: SelectionResult | Sequence[int], basis: TotalDegreeBasis, tri: Triangulation) -> MomentMatrix:
    indices = selection.indices if isinstance(selection, SelectionResult) else list(selection)
    if len(indices) != len(basis):
        raise DimensionMismatch(f"{len(indices)} triangles selected for a basis of size {len(basis)}")
    return moment_matrix(tri, indices, basis)


def lebesgue_function(
    selection: SelectionResult | Sequence[int],
    basis: TotalDegreeBasis,
    tri: Triangulation,
    grid: EvaluationGrid | None = None,
) -> np.ndarray:
    """Values of sum_j |l_j| on the grid, in grid.points order."""
    grid = grid or evaluation_grid()
    V = _selection_matrix(selection, basis, tri)
    return _row_one_norms(basis, lagrange_coefficients(V), grid)


def lebesgue_constant(
    selection: SelectionResult | Sequence[int],
    basis: TotalDegreeBasis,
    tri: Triangulation,
    grid: EvaluationGrid | None = None,
) -> float:
    return float(lebesgue_function(selection, basis, tri, grid).max())


def nodal_lebesgue_constant(points, m: int, grid: EvaluationGrid | None = None, kind: str = CHEBYSHEV) -> float:
    """Lebesgue constant of interpolation at the given points (point values instead of averages)."""
    grid = grid or evaluation_grid()
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    basis = TotalDegreeBasis(m, kind)
    if len(points) != len(basis):
        raise DimensionMismatch(f"{len(points)} points for a basis of size {len(basis)}")
    V = basis_matrix(basis, points[:, 0], points[:, 1])
    return float(_row_one_norms(basis, lagrange_coefficients(V), grid).max())


class NormBoundFactors(NamedTuple):
    zeta: float
    eta: float
    r1_inv_norm: float
    qt_norm: float
    r2_norm: float
    pinv_norm: float
    w1_term_norm: float
    M: int
    D: int

    @property
    def total(self) -> float:
        return self.zeta + self.eta


def norm_bound(W: MomentMatrix | np.ndarray, C: MomentMatrix | np.ndarray) -> NormBoundFactors:
    """Upper bound zeta + eta on the sup-norm of the histopolation-regression operator.

    eta = ||(A^T A)^-1 A^T||_1 (D + M ||W1 R1^-1 Q^T||_1)
    zeta = ||R1^-1||_1 (M ||Q^T||_1 + ||R2||_1 eta)

    with C = Q [R1 R2], A = W2 - W1 R1^-1 R2 and matrix 1-norms. The constants
    D and M are used exactly as written, although the data vector has N entries.
    eta is 0 when D = M.
    """
    W = np.asarray(W.entries if isinstance(W, MomentMatrix) else W, dtype=float)
    C = np.asarray(C.entries if isinstance(C, MomentMatrix) else C, dtype=float)
    M, D = C.shape
    factors = elimination_factors(W, C)

    r1_inv_norm = one_norm(factors.r1_inv)
    qt_norm = one_norm(factors.q.T)
    r2_norm = one_norm(factors.r2)
    w1_term_norm = one_norm(W[:, :M] @ factors.r1_inv @ factors.q.T)

    a = factors.a
    if D > M:
        gram = a.T @ a
        if np.linalg.matrix_rank(a) < a.shape[1]:
            raise RankDeficientDesign("reduced design matrix A is not of full column rank")
        pinv_norm = one_norm(solve(gram, a.T))
        eta = pinv_norm * (D + M * w1_term_norm)
    else:
        pinv_norm = 0.0
        eta = 0.0
    zeta = r1_inv_norm * (M * qt_norm + r2_norm * eta)
    return NormBoundFactors(zeta, eta, r1_inv_norm, qt_norm, r2_norm, pinv_norm, w1_term_norm, M, D)


def regression_operator(W: MomentMatrix | np.ndarray, n_selected: int) -> np.ndarray:
    """Matrix G (D x N) mapping the averages b to the regression coefficients.

    The constraints are the first n_selected rows of W with data b[:n_selected].
    """
    W = np.asarray(W.entries if isinstance(W, MomentMatrix) else W, dtype=float)
    N, D = W.shape
    M = n_selected
    kkt = kkt_matrix(W, W[:M])
    rhs = np.zeros((D + M, N))
    rhs[:D] = 2.0 * W.T
    rhs[D:, :M] = np.eye(M)
    return solve(kkt, rhs)[:D]


def regression_lebesgue_constant(W: MomentMatrix | np.ndarray, n_selected: int, basis: TotalDegreeBasis, grid: EvaluationGrid | None = None) -> float:
    """max over the grid of ||p(xi) G||_1: Lebesgue constant of the regression operator on the grid."""
    grid = grid or evaluation_grid()
    return float(_row_one_norms(basis, regression_operator(W, n_selected), grid).max())


def operator_norm_lower_bound(
    W: MomentMatrix | np.ndarray,
    n_selected: int,
    basis: TotalDegreeBasis,
    grid: EvaluationGrid | None = None,
    trials: int = 200,
    seed: int = 0,
) -> float:
    """max ||Pi b||_inf over random +-1 data vectors b.

    Any +-1 vector is the average data of a piecewise-constant field with sup
    norm 1, so the result never exceeds the operator norm.
    """
    grid = grid or evaluation_grid()
    G = regression_operator(W, n_selected)
    rng = np.random.default_rng(seed)
    data = rng.choice([-1.0, 1.0], size=(G.shape[1], trials))
    coeffs = G @ data
    best = 0.0
    points = grid.points
    for start in range(0, len(points), GRID_CHUNK):
        block = points[start:start + GRID_CHUNK]
        values = basis_matrix(basis, block[:, 0], block[:, 1]) @ coeffs
        best = max(best, float(np.abs(values).max()))
    return best


class EnvelopeFit(NamedTuple):
    c: float  # smallest c with values <= c (ln m)^2
    ratios: np.ndarray


def log_squared_envelope(degrees: Sequence[int], values: Sequence[float]) -> EnvelopeFit:
    """Fit one constant c with values <= c (ln m)^2 for every m >= 2."""
    degrees = np.asarray(degrees, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = degrees >= 2
    if not keep.any():
        raise ValueError("the (ln m)^2 envelope needs at least one degree m >= 2")
    ratios = values[keep] / np.log(degrees[keep]) ** 2
    return EnvelopeFit(float(ratios.max()), ratios)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or xs.shape != ys.shape:
        raise ValueError("loglog_slope needs two or more matching samples")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
