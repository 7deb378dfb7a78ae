"""Histopolation and histopolation-regression solves.

Pure histopolation matches the averages on the M selected triangles exactly
with a degree-m polynomial. Histopolation-regression uses a degree-d
polynomial (d > m), matches the same M averages exactly and fits the averages
on every triangle in the least-squares sense through the KKT system

    [[2 W^T W, C^T], [C, 0]] [a; z] = [2 W^T b; d].

Histopolant file format (UTF-8 JSON)::

    {"method": "padua", "m": 5, "d": 7, "basis": "chebyshev_product", "coeffs": [...]}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from basis import BASIS_KINDS, CHEBYSHEV, TotalDegreeBasis, basis_matrix, dimension
from data_io import read_json, write_json
from histopolation_errors import (
    DimensionMismatch,
    RankDeficientConstraints,
    RankDeficientDesign,
    SingularKKT,
    SingularSystem,
)
from linalg_utils import RESIDUAL_TOL, condition_estimate, solve, warn_if_ill_conditioned
from mesh import Triangulation, require_mesh
from quadrature import Field, MomentMatrix, averages, moment_matrix, triangle_rule
from selection import PaduaConfig, SelectionResult, select

DEFAULT_QUADRATURE_EXTRA = 10
RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Histopolant:
    basis: TotalDegreeBasis
    coeffs: np.ndarray
    method: str = ""
    m: int = 0
    d: int = 0
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).ravel()
        if coeffs.shape != (len(self.basis),):
            raise DimensionMismatch(f"expected {len(self.basis)} coefficients, got {coeffs.size}")
        if not np.all(np.isfinite(coeffs)):
            raise SingularSystem("histopolant coefficients are not finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, x, y) -> np.ndarray:
        return basis_matrix(self.basis, x, y) @ self.coeffs

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "m": self.m,
            "d": self.d,
            "basis": self.basis.kind,
            "coeffs": self.coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "Histopolant":
        try:
            kind = payload.get("basis", CHEBYSHEV)
            m = int(payload["m"])
            d = int(payload["d"])
            coeffs = payload["coeffs"]
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"Malformed histopolant record: {e!r}") from None
        if kind not in BASIS_KINDS:
            raise ValueError(f"Unknown basis kind {kind!r}")
        if len(coeffs) != dimension(d):
            raise DimensionMismatch(f"degree {d} needs {dimension(d)} coefficients, got {len(coeffs)}")
        return cls(TotalDegreeBasis(d, kind), coeffs, method=str(payload.get("method", "")), m=m, d=d)


def write_histopolant(filepath: str | Path, h: Histopolant) -> None:
    write_json(filepath, h.to_dict())


def read_histopolant(filepath: str | Path) -> Histopolant:
    return Histopolant.from_dict(read_json(filepath))


@dataclass(frozen=True)
class AveragesData:
    """Triangle averages b on all triangles, selected triangles first; d is the head of b."""

    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if d.size > b.size or not np.array_equal(b[:d.size], d):
            raise DimensionMismatch("d must equal the leading entries of b")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_averages(cls, b, n_selected: int) -> "AveragesData":
        b = np.asarray(b, dtype=float)
        return cls(b, b[:n_selected].copy())


def _as_matrix(a: MomentMatrix | np.ndarray) -> np.ndarray:
    return np.asarray(a.entries if isinstance(a, MomentMatrix) else a, dtype=float)


def _basis_for(a: MomentMatrix | np.ndarray, basis: TotalDegreeBasis | None, n_cols: int) -> TotalDegreeBasis:
    if basis is None and isinstance(a, MomentMatrix):
        basis = a.basis
    if basis is None:
        raise ValueError("a basis is needed when the matrix is a plain array")
    if len(basis) != n_cols:
        raise DimensionMismatch(f"basis has {len(basis)} elements, matrix has {n_cols} columns")
    return basis


def histopolate(
    V: MomentMatrix | np.ndarray,
    d,
    basis: TotalDegreeBasis | None = None,
    method: str = "",
) -> Histopolant:
    """Coefficients a with V a = d, V the square matrix of averages on the selected triangles."""
    V_arr = _as_matrix(V)
    d = np.asarray(d, dtype=float)
    if V_arr.ndim != 2 or V_arr.shape[0] != V_arr.shape[1]:
        raise DimensionMismatch(f"histopolation needs a square matrix, got shape {V_arr.shape}")
    if d.shape != (V_arr.shape[0],):
        raise DimensionMismatch(f"expected {V_arr.shape[0]} averages, got shape {d.shape}")
    basis = _basis_for(V, basis, V_arr.shape[1])

    coeffs = solve(V_arr, d)
    cond = condition_estimate(V_arr)
    warn_if_ill_conditioned(cond, "Vandermonde matrix")
    return Histopolant(basis, coeffs, method=method, m=basis.degree, d=basis.degree, diagnostics={"condition": cond})


def kkt_matrix(W: np.ndarray, C: np.ndarray) -> np.ndarray:
    """[[2 W^T W, C^T], [C, 0]]."""
    D = W.shape[1]
    M = C.shape[0]
    kkt = np.zeros((D + M, D + M))
    kkt[:D, :D] = 2.0 * W.T @ W
    kkt[:D, D:] = C.T
    kkt[D:, :D] = C
    return kkt


def _check_regression_shapes(W: np.ndarray, C: np.ndarray, data: AveragesData) -> tuple[int, int, int]:
    if W.ndim != 2 or C.ndim != 2 or W.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"W {W.shape} and C {C.shape} must share their column count")
    N, D = W.shape
    M = C.shape[0]
    if data.b.shape != (N,) or data.d.shape != (M,):
        raise DimensionMismatch(f"expected b of length {N} and d of length {M}, got {data.b.size} and {data.d.size}")
    if M > D:
        raise RankDeficientConstraints(f"{M} constraints exceed {D} unknowns")
    if D - M > N - M:
        raise RankDeficientDesign(f"{D - M} free coefficients but only {N - M} regression rows")
    return N, M, D


def _numerical_rank(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    s = scipy.linalg.svdvals(a)
    return int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 0


def histopolate_regress(
    W: MomentMatrix | np.ndarray,
    C: MomentMatrix | np.ndarray,
    data: AveragesData,
    basis: TotalDegreeBasis | None = None,
    method: str = "",
    m: int | None = None,
) -> Histopolant:
    """Least-squares fit of every average subject to exact agreement on the selected ones."""
    W_arr = _as_matrix(W)
    C_arr = _as_matrix(C)
    N, M, D = _check_regression_shapes(W_arr, C_arr, data)
    basis = _basis_for(W, basis, D)

    if _numerical_rank(C_arr) < M:
        raise RankDeficientConstraints("constraint matrix C is not of full row rank")
    if _numerical_rank(W_arr) < D:
        raise RankDeficientDesign("design matrix W is not of full column rank")

    kkt = kkt_matrix(W_arr, C_arr)
    rhs = np.concatenate([2.0 * W_arr.T @ data.b, data.d])
    try:
        solution = solve(kkt, rhs)
    except SingularSystem as e:
        raise SingularKKT(f"KKT system could not be solved: {e}") from e

    coeffs = solution[:D]
    constraint_residual = float(np.abs(C_arr @ coeffs - data.d).max(initial=0.0))
    if constraint_residual > RESIDUAL_TOL * (1.0 + float(np.abs(data.d).max(initial=0.0))):
        raise SingularKKT(f"constraint residual {constraint_residual:.3e} exceeds tolerance")

    cond = condition_estimate(kkt)
    warn_if_ill_conditioned(cond, "KKT matrix")
    diagnostics = {
        "condition": cond,
        "constraint_residual": constraint_residual,
        "multipliers": solution[D:].tolist(),
    }
    m = m if m is not None else _degree_of_dimension(M)
    return Histopolant(basis, coeffs, method=method, m=m, d=basis.degree, diagnostics=diagnostics)


def _degree_of_dimension(M: int) -> int:
    m = 0
    while dimension(m) < M:
        m += 1
    return m


class EliminationFactors(NamedTuple):
    """Factors of the direct elimination: C = Q [R1 R2], A = W2 - W1 R1^-1 R2."""

    q: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    a: np.ndarray
    b1: np.ndarray
    r1_inv: np.ndarray


class EliminationResult(NamedTuple):
    coeffs: np.ndarray
    factors: EliminationFactors


def elimination_factors(W, C, b=None, d=None) -> EliminationFactors:
    """QR-factor C and eliminate the constrained coefficients from W.

    b1 is only formed when both data vectors are given.
    """
    W = _as_matrix(W)
    C = _as_matrix(C)
    M = C.shape[0]
    q, r = scipy.linalg.qr(C, mode="economic")
    r1, r2 = r[:, :M], r[:, M:]
    diag = np.abs(np.diag(r1))
    if M and (diag.max() == 0.0 or diag.min() < RANK_TOL * diag.max()):
        raise RankDeficientConstraints("leading block of the constraint matrix is singular")

    r1_inv = scipy.linalg.solve_triangular(r1, np.eye(M))
    W1, W2 = W[:, :M], W[:, M:]
    a = W2 - W1 @ (r1_inv @ r2)
    b1 = np.empty(0)
    if b is not None and d is not None:
        b1 = np.asarray(b, dtype=float) - W1 @ (r1_inv @ (q.T @ np.asarray(d, dtype=float)))
    return EliminationFactors(q=q, r1=r1, r2=r2, a=a, b1=b1, r1_inv=r1_inv)


def direct_elimination(W, C, b, d) -> EliminationResult:
    """Solve the constrained least-squares problem by elimination instead of the KKT system."""
    factors = elimination_factors(W, C, b, d)
    q, r1, r2, a, b1 = factors.q, factors.r1, factors.r2, factors.a, factors.b1
    if a.shape[1]:
        if _numerical_rank(a) < a.shape[1]:
            raise RankDeficientDesign("reduced design matrix A is not of full column rank")
        a2, *_ = scipy.linalg.lstsq(a, b1)
    else:
        a2 = np.empty(0)
    a1 = scipy.linalg.solve_triangular(r1, q.T @ np.asarray(d, dtype=float) - r2 @ a2)
    return EliminationResult(np.concatenate([a1, a2]), factors)


def pipeline(
    tri: Triangulation,
    method: str,
    m: int,
    d: int | None,
    f: Field,
    *,
    kind: str = CHEBYSHEV,
    quadrature_extra: int = DEFAULT_QUADRATURE_EXTRA,
    padua: PaduaConfig | None = None,
    pivot_tol: float = 1e-12,
    selection: SelectionResult | None = None,
) -> Histopolant:
    """Select, reorder, assemble and solve.

    Pure histopolation when d is None, histopolation-regression of degree d
    otherwise. A precomputed selection skips the selection step.
    """
    require_mesh(tri)
    if d is not None and d <= m:
        raise ValueError(f"regression degree d={d} must exceed m={m}")
    if selection is None:
        selection = select(tri, method, m, kind=kind, padua=padua, pivot_tol=pivot_tol)
    chosen = list(selection.indices)
    M = len(chosen)
    ordered = tri.reordered(reorder_first(tri.n_triangles, chosen))

    degree = m if d is None else d
    basis = TotalDegreeBasis(degree, kind)
    rule = triangle_rule(degree + quadrature_extra)

    if d is None:
        values = averages(f, ordered, range(M), rule)
        V = moment_matrix(ordered, range(M), basis)
        h = histopolate(V, values, method=selection.method)
    else:
        values = averages(f, ordered, None, rule)
        W = moment_matrix(ordered, None, basis)
        h = histopolate_regress(W, W.take_rows(M), AveragesData.from_averages(values, M), method=selection.method, m=m)

    h.diagnostics["selection"] = chosen
    h.diagnostics.update({f"selection_{k}": v for k, v in selection.diagnostics.items() if k != "attribution"})
    logging.debug(f"{selection.method} pipeline m={m} d={degree}: condition {h.diagnostics['condition']:.3e}")
    return h


def apply_operator(
    h: Histopolant | Field,
    tri: Triangulation,
    selection: SelectionResult,
    d: int | None = None,
    kind: str = CHEBYSHEV,
) -> Histopolant:
    """Histopolate (or regress) a field on a fixed selection, e.g. an existing Histopolant."""
    return pipeline(tri, selection.method, selection.degree, d, h, kind=kind, selection=selection)


def reorder_first(n_triangles: int, chosen: Sequence[int]) -> list[int]:
    taken = set(chosen)
    return list(chosen) + [i for i in range(n_triangles) if i not in taken]
