"""Dense symmetric kernels: Cholesky, SPD solves, extreme eigenpairs."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import NotPositiveDefiniteError, SingularUpdateError

__all__ = [
    "SpdFactor",
    "factor_spd",
    "solve_spd",
    "min_eig_sym",
    "sherman_morrison_inverse",
]


@dataclass(frozen=True)
class SpdFactor:
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == S``."""

    L: np.ndarray

    @property
    def dim(self):
        return self.L.shape[0]

    def reconstruct(self):
        return self.L @ self.L.T


def factor_spd(S, sym_tol=1e-10):
    """Cholesky-factor a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefiniteError
        If a pivot is non-positive; ``pivot`` is the zero-based index.
    ValueError
        If ``S`` is not square or not symmetric to ``sym_tol`` (relative).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = max(np.abs(S).max(initial=0.0), 1.0)
    if np.abs(S - S.T).max(initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    c, info = lapack.dpotrf(S, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf argument error {info}")
    return SpdFactor(np.tril(c))


def solve_spd(f, b):
    """Solve ``S x = b`` given the Cholesky factor of ``S``.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.dim:
        raise ValueError(f"dimension mismatch: factor {f.dim}, rhs {b.shape[0]}")
    t = solve_triangular(f.L, b, lower=True, check_finite=False)
    return solve_triangular(f.L.T, t, lower=False, check_finite=False)


def min_eig_sym(S):
    """Smallest eigenvalue of a symmetric matrix and a unit eigenvector."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    return float(vals[0]), vecs[:, 0]


def sherman_morrison_inverse(Q_inv, a, sign=1):
    """Rank-one update of an inverse: ``(Q + sign * a a^T)^{-1}``.

    Parameters
    ----------
    Q_inv : (n, n) ndarray
        Inverse of the base matrix.
    a : (n,) ndarray
        Update direction.
    sign : {1, -1}
        Whether the rank-one term is added or subtracted.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    Q_inv = np.asarray(Q_inv, dtype=float)
    a = np.asarray(a, dtype=float)
    Qa = Q_inv @ a
    denom = 1.0 + sign * float(a @ Qa)
    if denom <= 1e-12:
        raise SingularUpdateError(f"Sherman-Morrison denominator {denom:.3e} <= 1e-12")
    return Q_inv - sign * np.outer(Qa, Q_inv.T @ a) / denom
