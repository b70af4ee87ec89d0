"""Dense linear-algebra kernels shared by the solver stack.

Vectors are 1-D float numpy arrays, matrices 2-D.  The two nontrivial
kernels are a pivot-checked Cholesky solve for symmetric positive
definite systems and the spectral (operator-2) norm.  Everything is a
pure function on immutable inputs; problems here are small and dense
(a few hundred dimensions at most), so direct factorizations only.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

SYMMETRY_TOL = 1e-10
PIVOT_TOL = 1e-12


class DimensionMismatch(ValueError):
    """Operand dimensions do not agree."""


class NonSquare(ValueError):
    """A square matrix is required."""


class NotSPD(ValueError):
    """Matrix is not symmetric positive definite."""


def as_point(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float vector of dimension >= 1."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"expected a nonempty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("vector entries must be finite")
    return p


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D float matrix."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def cholesky_spd(m) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Symmetry is checked to ``SYMMETRY_TOL`` relative to the largest
    entry; every pivot must exceed ``PIVOT_TOL``.  Raises
    :class:`NotSPD` otherwise.
    """
    a = as_matrix(m)
    n, k = a.shape
    if n != k:
        raise NonSquare(f"matrix is {n}x{k}")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > SYMMETRY_TOL * scale:
        raise NotSPD("matrix is not symmetric")
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= PIVOT_TOL:
            raise NotSPD(f"pivot {pivot:.3e} at column {j}")
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_with_factor(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``L L^T y = rhs`` given a lower Cholesky factor ``L``.

    ``rhs`` may be a vector or a matrix of stacked right-hand sides.
    Inputs are trusted (no finiteness re-validation); this sits on the
    solver hot path.
    """
    z = solve_triangular(lower, rhs, lower=True, check_finite=False)
    return solve_triangular(lower.T, z, lower=False, check_finite=False)


def spd_solve(m, b) -> np.ndarray:
    """Solve ``M y = b`` for symmetric positive definite ``M``.

    The residual satisfies ``norm(M y - b) <= 1e-10 * (1 + norm(b))``
    for well-conditioned inputs.  Raises :class:`NotSPD` when the
    factorization hits a pivot at or below ``PIVOT_TOL`` and
    :class:`DimensionMismatch` when shapes disagree.
    """
    a = as_matrix(m)
    rhs = as_point(b)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")
    if a.shape[0] != rhs.shape[0]:
        raise DimensionMismatch(
            f"matrix is {a.shape[0]}x{a.shape[1]} but right-hand side has length {rhs.shape[0]}"
        )
    return solve_with_factor(cholesky_spd(a), rhs)


def spectral_norm(m) -> float:
    """Largest singular value of a square matrix.

    For symmetric input this equals the largest absolute eigenvalue.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")
    return float(np.linalg.norm(a, 2))
