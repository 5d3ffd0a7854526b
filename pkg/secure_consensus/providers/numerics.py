"""Dense linear-algebra kernels with a single tolerance policy.

Singular values at or below ``rel_tol * sigma_max * max(rows, cols)`` are
treated as zero by both :func:`pinv` and :func:`rank`, so rank differences
and projectors built from the same matrices always agree.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

from secure_consensus.constants import DEFAULT_REL_TOL
from secure_consensus.constants import SYMMETRIC_EIGEN_TOL
from secure_consensus.consensus_exception import NumericalException


class NonFiniteMatrixException(NumericalException):
    def __init__(self, name: str = "matrix"):
        super().__init__(f"The {name} contains non-finite entries (NaN or Inf).")


class NonSymmetricMatrixException(NumericalException):
    def __init__(self, asymmetry: float):
        super().__init__(
            f"Symmetric eigensolver received a non-symmetric matrix (max |A - A^T| = {asymmetry:.3e})."
        )


class InvalidProbabilityException(NumericalException):
    def __init__(self, p: float):
        super().__init__(f"Quantile probability must lie strictly between 0 and 1, got {p}.")


@dataclass(frozen=True)
class RankResult:
    rank: int
    singular_values: np.ndarray
    tolerance_used: float


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteMatrixException(name)
    return matrix


def svd_tolerance(singular_values: np.ndarray, shape: tuple, rel_tol: float) -> float:
    if singular_values.size == 0:
        return 0.0
    return rel_tol * float(singular_values[0]) * max(shape)


def pinv(M, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    matrix = as_matrix(M)
    if matrix.size == 0:
        return np.zeros(matrix.shape[::-1])

    U, s, Vt = np.linalg.svd(matrix, full_matrices=False)
    tolerance = svd_tolerance(s, matrix.shape, rel_tol)

    keep = s > tolerance
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]

    return (Vt.T * s_inv) @ U.T


def rank(M, rel_tol: float = DEFAULT_REL_TOL) -> RankResult:
    matrix = as_matrix(M)
    if matrix.size == 0:
        return RankResult(rank=0, singular_values=np.zeros(0), tolerance_used=0.0)

    s = np.linalg.svd(matrix, compute_uv=False)
    tolerance = svd_tolerance(s, matrix.shape, rel_tol)

    return RankResult(
        rank=int(np.count_nonzero(s > tolerance)),
        singular_values=s,
        tolerance_used=tolerance,
    )


def eigenvalues_symmetric(
    A, with_vectors: bool = False, tol: float = SYMMETRIC_EIGEN_TOL
) -> Union[np.ndarray, tuple]:
    """
    Eigenvalues of a symmetric matrix in descending order.

    With ``with_vectors`` the orthonormal eigenvectors are returned as the
    columns of a second array, ordered to match.
    """
    matrix = as_matrix(A)
    if matrix.shape[0] != matrix.shape[1]:
        raise NumericalException(f"Expected a square matrix, got shape {matrix.shape}.")

    asymmetry = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asymmetry > tol * max(1.0, np.linalg.norm(matrix, 2)):
        raise NonSymmetricMatrixException(asymmetry)

    symmetric = (matrix + matrix.T) / 2
    if not with_vectors:
        return np.linalg.eigvalsh(symmetric)[::-1]

    values, vectors = np.linalg.eigh(symmetric)
    return values[::-1], vectors[:, ::-1]


def gaussian_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidProbabilityException(p)
    return float(ndtri(p))
