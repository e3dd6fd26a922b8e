"""Spectral and structural analysis of the coupling matrix.

Computes the positive left null vector of the outer coupling matrix (the
Lyapunov weighting), the pinned matrix, and extreme eigenvalues of
symmetric parts.  Matrices here are small and dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PerronWeights",
    "GraphAnalysisError",
    "left_null_vector",
    "pinned_matrix",
    "sym_part_max_eig",
    "lyapunov_stability_check",
]

NULL_RESIDUAL_TOL = 1e-10
MAX_DENSE_SIZE = 64


class GraphAnalysisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PerronWeights:
    """Positive left null vector p of Xi, normalized to max(p) = 1."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.p)

    def __eq__(self, other):
        return isinstance(other, PerronWeights) and np.array_equal(self.p, other.p)


def left_null_vector(Xi: np.ndarray) -> PerronWeights:
    """Positive left null vector of a zero-row-sum irreducible matrix.

    Solved as a linear system with the last component pinned to 1, then
    renormalized so max(p) = 1; the residual ||p^T Xi||_inf is checked
    against 1e-10.
    """
    Xi = np.asarray(Xi, dtype=float)
    N = Xi.shape[0]
    if N == 1:
        return PerronWeights(p=np.ones(1))
    # p^T Xi = 0  <=>  Xi^T p = 0; pin p[N-1] = 1 and solve the first
    # N-1 equations (the grounded submatrix is nonsingular for
    # irreducible Xi).
    M = Xi.T
    A = M[: N - 1, : N - 1]
    b = -M[: N - 1, N - 1]
    try:
        head = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise GraphAnalysisError("null vector not found") from exc
    p = np.concatenate([head, [1.0]])
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise GraphAnalysisError("left null vector is not strictly positive")
    p = p / p.max()
    residual = np.max(np.abs(p @ Xi))
    if not np.isfinite(residual) or residual > NULL_RESIDUAL_TOL:
        raise GraphAnalysisError(
            f"null vector not found (residual {residual:.3g})")
    return PerronWeights(p=p)


def pinned_matrix(Xi: np.ndarray, sigma: float, strength: float) -> np.ndarray:
    """strength * (Xi - diag(sigma, 0, ..., 0))."""
    Xi = np.asarray(Xi, dtype=float)
    out = Xi.copy()
    out[0, 0] -= sigma
    return strength * out


def sym_part_max_eig(M: np.ndarray, max_size: int = MAX_DENSE_SIZE) -> float:
    """Largest eigenvalue of (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] > max_size:
        raise GraphAnalysisError(
            f"matrix size {M.shape[0]} exceeds dense limit {max_size}")
    if not np.all(np.isfinite(M)):
        raise GraphAnalysisError("matrix has non-finite entries")
    return float(np.linalg.eigvalsh((M + M.T) / 2.0)[-1])


def lyapunov_stability_check(Xi: np.ndarray, sigma: float,
                             strength: float) -> bool:
    """True iff {P * strength*(Xi - diag(sigma,0,...))}^s is negative definite."""
    P = left_null_vector(Xi).P
    S = P @ pinned_matrix(Xi, sigma, strength)
    return sym_part_max_eig(S) < -1e-12
