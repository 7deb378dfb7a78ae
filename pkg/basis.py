"""Graded total-degree polynomial bases on the plane.

Exponent pairs (a, b) are ordered by total degree a + b, then by a ascending,
so the first dimension(m) entries of a degree-d basis span P_m for every m <= d.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from histopolation_errors import DimensionMismatch

CHEBYSHEV = "chebyshev_product"
MONOMIAL = "monomial"
BASIS_KINDS = (CHEBYSHEV, MONOMIAL)


def dimension(m: int) -> int:
    """dim P_m(R^2) = (m + 1)(m + 2) / 2."""
    if m < 0:
        raise ValueError(f"degree must be non-negative, got {m}")
    return (m + 1) * (m + 2) // 2


def exponents(d: int) -> list[tuple[int, int]]:
    return [(a, s - a) for s in range(d + 1) for a in range(s + 1)]


@dataclass(frozen=True)
class TotalDegreeBasis:
    degree: int
    kind: str = CHEBYSHEV

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be non-negative, got {self.degree}")
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @cached_property
    def ordering(self) -> tuple[tuple[int, int], ...]:
        return tuple(exponents(self.degree))

    def __len__(self) -> int:
        return dimension(self.degree)

    def prefix(self, m: int) -> "TotalDegreeBasis":
        """The leading sub-basis spanning P_m."""
        if not 0 <= m <= self.degree:
            raise ValueError(f"prefix degree {m} outside [0, {self.degree}]")
        return TotalDegreeBasis(m, self.kind)


def _univariate_table(t: np.ndarray, degree: int, kind: str) -> np.ndarray:
    """Rows k = 0..degree of T_k(t) (three-term recurrence) or t**k."""
    table = np.empty((degree + 1,) + t.shape)
    table[0] = 1.0
    if degree >= 1:
        table[1] = t
    for k in range(2, degree + 1):
        if kind == CHEBYSHEV:
            table[k] = 2.0 * t * table[k - 1] - table[k - 2]
        else:
            table[k] = t * table[k - 1]
    return table


def basis_matrix(basis: TotalDegreeBasis, x, y) -> np.ndarray:
    """Evaluate every basis element at every point; shape x.shape + (len(basis),)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    tx = _univariate_table(x, basis.degree, basis.kind)
    ty = _univariate_table(y, basis.degree, basis.kind)
    a = np.array([e[0] for e in basis.ordering])
    b = np.array([e[1] for e in basis.ordering])
    return np.moveaxis(tx[a] * ty[b], 0, -1)


def eval_basis(basis: TotalDegreeBasis, p) -> np.ndarray:
    return basis_matrix(basis, p[0], p[1])


def eval_poly(coeffs, basis: TotalDegreeBasis, p) -> float:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(basis),):
        raise DimensionMismatch(f"expected {len(basis)} coefficients, got shape {coeffs.shape}")
    return float(eval_basis(basis, p) @ coeffs)
