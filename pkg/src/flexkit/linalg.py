"""Dense linear-algebra kernel used by the solver modules.

Matrices are plain ``numpy.ndarray`` objects in row-major (C) order.  All
routines are pure functions; problems at the intended scale are a few tens
of rows, so no sparsity is exploited.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import NotSPDError, RankDeficientError, SingularError

__all__ = ["cholesky", "solve_linear", "least_norm", "row_rank"]

# Relative pivot thresholds; double precision leaves wide margins at this scale.
_CHOL_PIVOT_RTOL = 1e-13
_LU_PIVOT_RTOL = 1e-12
_RANK_RTOL = 1e-10
_SYM_RTOL = 1e-12


def _as_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == a for symmetric positive definite a.

    Raises NotSPDError if the matrix is not symmetric (relative tolerance
    1e-12 on the largest entry) or any elimination pivot falls at or below
    1e-13 times the largest diagonal entry.
    """
    a = _as_square(a)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0 and float(np.max(np.abs(a - a.T))) > _SYM_RTOL * scale:
        raise NotSPDError("matrix is not symmetric")
    a = 0.5 * (a + a.T)

    n = a.shape[0]
    max_diag = float(np.max(np.diag(a))) if n else 0.0
    pivot_floor = _CHOL_PIVOT_RTOL * max(max_diag, 0.0)
    lower = np.zeros_like(a)
    for k in range(n):
        pivot = a[k, k] - lower[k, :k] @ lower[k, :k]
        if pivot <= pivot_floor:
            raise NotSPDError(f"pivot {pivot:.3e} at row {k} (floor {pivot_floor:.3e})")
        lower[k, k] = np.sqrt(pivot)
        if k + 1 < n:
            lower[k + 1 :, k] = (a[k + 1 :, k] - lower[k + 1 :, :k] @ lower[k, :k]) / lower[k, k]
    return lower


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b by LU with partial pivoting.

    Raises SingularError when a pivot magnitude drops below 1e-12 times the
    largest entry of the input matrix.
    """
    a = _as_square(a)
    b = np.asarray(b, dtype=float)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise SingularError("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < _LU_PIVOT_RTOL * scale:
        raise SingularError("pivot below tolerance; matrix is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def least_norm(a: np.ndarray, b: np.ndarray, weight_chol: np.ndarray) -> np.ndarray:
    """Minimize x.T @ W @ x subject to a @ x = b, with W = L @ L.T given by
    its Cholesky factor.

    The problem is whitened with u = L.T @ x and solved as a plain least-norm
    system in u.  ``a`` is m-by-n with m <= n and must have full row rank
    (relative tolerance 1e-10), else RankDeficientError is raised.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    lower = np.asarray(weight_chol, dtype=float)
    m, n = a.shape
    if m > n:
        raise ValueError(f"expected m <= n, got shape {a.shape}")

    # B = A L^{-T}; rows of A expressed in whitened coordinates.
    bmat = scipy.linalg.solve_triangular(lower, a.T, lower=True, check_finite=False).T
    u_svd, s, vt = np.linalg.svd(bmat, full_matrices=False)
    if s.size == 0 or s[-1] <= _RANK_RTOL * s[0]:
        raise RankDeficientError(f"row rank < {m}")
    u = vt.T @ ((u_svd.T @ b) / s)
    return scipy.linalg.solve_triangular(lower.T, u, lower=False, check_finite=False)


def row_rank(a: np.ndarray, tol: float = _RANK_RTOL) -> int:
    """Numerical rank via QR with column pivoting at relative tolerance tol."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0 or not np.any(a):
        return 0
    r = scipy.linalg.qr(a, mode="r", pivoting=True, check_finite=False)[0]
    d = np.abs(np.diag(r))
    return int(np.sum(d > tol * d[0]))
