"""Pivoted factorizations and solves used by selection, solver and analysis.

Thin wrappers over ``scipy.linalg`` (LAPACK getrf / geqp3). LAPACK picks pivots
with idamax, which returns the first maximal entry, so ties resolve to the
lowest row (LU) or leftmost column (QR).
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg

from histopolation_errors import SingularSystem

# Dense matrices are plain 2-D float arrays.
DenseMatrix = np.ndarray

SOLVE_PIVOT_TOL = 1e-14
RESIDUAL_TOL = 1e-8
ILL_CONDITIONED = 1e12


class LUResult(NamedTuple):
    perm: np.ndarray  # A[perm] == lower @ upper
    lower: np.ndarray
    upper: np.ndarray
    pivots: np.ndarray  # |upper[k, k]|


class QRResult(NamedTuple):
    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray  # A[:, perm] == q @ r
    diagonal: np.ndarray  # |r[k, k]|, non-increasing


def lu_partial_pivot(a: DenseMatrix) -> LUResult:
    """Row-pivoted LU of a tall (rows >= cols) matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"lu_partial_pivot needs rows >= cols, got shape {a.shape}")
    # with p_indices, a == lower[p] @ upper; invert p to get the pivot order
    p, lower, upper = scipy.linalg.lu(a, p_indices=True)
    perm = np.argsort(p)
    return LUResult(perm=perm, lower=lower, upper=upper, pivots=np.abs(np.diag(upper)))


def qr_column_pivot(a: DenseMatrix) -> QRResult:
    a = np.asarray(a, dtype=float)
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    return QRResult(q=q, r=r, perm=np.asarray(perm), diagonal=np.abs(np.diag(r)))


def one_norm(a: DenseMatrix) -> float:
    """Matrix operator 1-norm (max absolute column sum); 0 for empty matrices."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=0).max())


def condition_estimate(a: DenseMatrix) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    with np.errstate(all="ignore"):
        value = float(np.linalg.cond(a))
    return value if np.isfinite(value) else float("inf")


def solve(a: DenseMatrix, rhs, pivot_tol: float = SOLVE_PIVOT_TOL) -> np.ndarray:
    """Solve a square system by row-pivoted elimination.

    Raises SingularSystem on pivot breakdown or when the residual exceeds
    1e-8 (1 + ||rhs||_inf).
    """
    a = np.asarray(a, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"solve needs a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros_like(rhs)

    scale = float(np.abs(a).max())
    if scale == 0.0:
        raise SingularSystem("matrix is identically zero")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= pivot_tol * scale:
        k = int(np.argmin(pivots))
        raise SingularSystem(f"pivot breakdown at step {k}: |u_kk| = {pivots[k]:.3e}")

    x = scipy.linalg.lu_solve((lu, piv), rhs)
    residual = float(np.abs(a @ x - rhs).max())
    if residual > RESIDUAL_TOL * (1.0 + float(np.abs(rhs).max(initial=0.0))):
        raise SingularSystem(f"residual {residual:.3e} exceeds tolerance")
    return x


def warn_if_ill_conditioned(cond: float, what: str) -> None:
    if cond > ILL_CONDITIONED:
        logging.warning(f"{what} is ill-conditioned (cond ~ {cond:.3e})")
