"""Dense linear-algebra primitives backing the backward-error formulas.

Everything here is a pure function of its inputs; complex input is supported
throughout.  Rank decisions are made relative to the largest singular value
with ``DEFAULT_RANK_TOL``.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

DEFAULT_RANK_TOL = 1e-12


class EigenvectorConditionError(np.linalg.LinAlgError):
    """Raised when a matrix function is requested for a matrix whose
    eigenvector basis is too ill conditioned (defective or nearly so)."""


class MinNormSolution(NamedTuple):
    x: np.ndarray
    rank: int


class SvdFactors(NamedTuple):
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization: stacks the columns of ``a``."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((rows, cols), order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def khatri_rao_t(G: np.ndarray, Vt: np.ndarray) -> np.ndarray:
    """Row-wise Kronecker (Khatri-Rao transpose) product.

    Row i of the result is ``G[i, :] kron Vt[i, :]``; for G of shape (p, k)
    and Vt of shape (p, n) the result has shape (p, k*n).
    """
    G = np.atleast_2d(np.asarray(G))
    Vt = np.atleast_2d(np.asarray(Vt))
    if G.shape[0] != Vt.shape[0]:
        raise ValueError(
            f"row count mismatch: G has {G.shape[0]} rows, Vt has {Vt.shape[0]}"
        )
    p, k = G.shape
    n = Vt.shape[1]
    return (G[:, :, None] * Vt[:, None, :]).reshape(p, k * n)


def commutation(p: int) -> np.ndarray:
    """The (p, p) commutation matrix (perfect shuffle).

    Satisfies ``commutation(p) @ vec(X) == vec(X.T)`` for every p-by-p X;
    it is a symmetric permutation and an involution.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    size = p * p
    P = np.zeros((size, size))
    i, j = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    src = (i + j * p).ravel()
    dst = (j + i * p).ravel()
    P[dst, src] = 1.0
    return P


def svd_pseudoinverse(
    A: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[np.ndarray, int]:
    """Moore-Penrose pseudoinverse with singular values <= rank_tol * s[0]
    truncated. Returns the pseudoinverse and the effective rank."""
    A = np.asarray(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size and s[0] > 0:
        keep = s > rank_tol * s[0]
    else:
        keep = np.zeros(s.shape, dtype=bool)
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=A.dtype), 0
    pinv = (Vt[keep].conj().T / s[keep]) @ U[:, keep].conj().T
    return pinv, rank


def min_norm_solve(
    A: np.ndarray, b: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL
) -> MinNormSolution:
    """Minimum-norm least-squares solution ``A^+ b`` via a truncated SVD.

    Among all minimizers of ``||A x - b||_2`` the returned x has minimal
    ``||x||_2`` and is orthogonal to the null space of A.  The effective
    rank used in the truncation is reported alongside.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size and s[0] > 0:
        keep = s > rank_tol * s[0]
    else:
        keep = np.zeros(s.shape, dtype=bool)
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        shape = (A.shape[1],) if b.ndim == 1 else (A.shape[1], b.shape[1])
        return MinNormSolution(np.zeros(shape, dtype=np.result_type(A, b)), 0)
    coeff = U[:, keep].conj().T @ b
    if b.ndim == 1:
        coeff = coeff / s[keep]
    else:
        coeff = coeff / s[keep, None]
    return MinNormSolution(Vt[keep].conj().T @ coeff, rank)


def economy_qr(V: np.ndarray, full: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """QR factorization ``V = Q T`` with T square (p x p) upper triangular.

    With ``full=True`` Q is the complete n x n unitary factor and V equals
    its first p columns times T.
    """
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[0] < V.shape[1]:
        raise ValueError("economy_qr expects a tall (n >= p) matrix")
    p = V.shape[1]
    Q, T = np.linalg.qr(V, mode="complete" if full else "reduced")
    return Q, T[:p, :]


def matrix_function(
    f: Callable[[complex], complex],
    M: np.ndarray,
    diag_cond_tol: float = 1e8,
) -> np.ndarray:
    """Scalar function of a diagonalizable matrix via eigendecomposition.

    Computes ``f(M) = X f(D) X^{-1}`` from ``M = X D X^{-1}`` and refuses to
    proceed when the eigenvector basis has condition number above
    ``diag_cond_tol`` (defective or nearly defective M).
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix_function expects a square matrix")
    w, X = np.linalg.eig(M)
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > diag_cond_tol:
        raise EigenvectorConditionError(
            "matrix is not safely diagonalizable: eigenvector condition "
            f"estimate {cond:.3e} exceeds the guard {diag_cond_tol:.3e}"
        )
    fw = np.array([f(lam) for lam in w])
    Y = X * fw  # X @ diag(f(w))
    return np.linalg.solve(X.T, Y.T).T


def frobenius(a) -> float:
    """Frobenius norm that also accepts scipy.sparse operands."""
    if hasattr(a, "toarray") and not isinstance(a, np.ndarray):
        data = a.tocoo().data
        return float(np.linalg.norm(data))
    return float(np.linalg.norm(np.asarray(a)))
