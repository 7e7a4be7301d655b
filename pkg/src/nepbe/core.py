"""Split-form nonlinear eigenvalue problems and their recurring residual objects.

A problem is F(lambda) = sum_j f_j(lambda) * F_j with scalar functions f_j
and square matrix coefficients F_j.  Coefficients may be dense ndarrays,
scipy.sparse matrices, or :class:`LowRankMatrix` factors; all evaluation
helpers accept any mix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .linalg import frobenius, matrix_function


@dataclass(frozen=True)
class ScalarFunction:
    """Scalar coefficient function with its first derivative."""

    f: Callable
    df: Callable
    name: str = ""

    def __call__(self, lam):
        return self.f(lam)


# Functions used by the built-in problems; the CLI registry extends these.
ONE = ScalarFunction(lambda lam: 1.0 + 0.0 * lam, lambda lam: 0.0 * lam, "one")
LAMBDA = ScalarFunction(lambda lam: lam, lambda lam: 1.0 + 0.0 * lam, "lambda")
NEG_LAMBDA = ScalarFunction(lambda lam: -lam, lambda lam: -1.0 + 0.0 * lam, "neg_lambda")
LAMBDA2 = ScalarFunction(lambda lam: lam * lam, lambda lam: 2.0 * lam, "lambda2")
EXP_NEG = ScalarFunction(lambda lam: np.exp(-lam), lambda lam: -np.exp(-lam), "exp_neg")
EXP_NEG2 = ScalarFunction(
    lambda lam: np.exp(-2.0 * lam), lambda lam: -2.0 * np.exp(-2.0 * lam), "exp_neg2"
)


class LowRankMatrix:
    """Implicit n x n matrix A @ B.T held in factored form."""

    def __init__(self, A: np.ndarray, B: np.ndarray):
        A = np.asarray(A)
        B = np.asarray(B)
        if A.ndim != 2 or B.ndim != 2 or A.shape != B.shape:
            raise ValueError("LowRankMatrix factors must share an (n, q) shape")
        self.A = A
        self.B = B

    @property
    def shape(self):
        return (self.A.shape[0], self.B.shape[0])

    @property
    def T(self) -> "LowRankMatrix":
        return LowRankMatrix(self.B, self.A)

    def matmat(self, X: np.ndarray) -> np.ndarray:
        """(A B^T) @ X."""
        return self.A @ (self.B.T @ X)

    def rmatmat(self, X: np.ndarray) -> np.ndarray:
        """(A B^T)^T @ X."""
        return self.B @ (self.A.T @ X)

    def toarray(self) -> np.ndarray:
        return self.A @ self.B.T

    def frobenius_norm(self) -> float:
        g = (self.A.conj().T @ self.A) @ (self.B.T @ self.B.conj())
        return float(np.sqrt(max(np.real(np.trace(g)), 0.0)))


def coeff_matmat(F, X: np.ndarray) -> np.ndarray:
    """F @ X for a dense / sparse / low-rank coefficient."""
    if isinstance(F, LowRankMatrix):
        return F.matmat(X)
    return np.asarray(F @ X)


def coeff_frobenius(F) -> float:
    if isinstance(F, LowRankMatrix):
        return F.frobenius_norm()
    return frobenius(F)


def coeff_dense(F) -> np.ndarray:
    if isinstance(F, LowRankMatrix):
        return F.toarray()
    if sp.issparse(F):
        return F.toarray()
    return np.asarray(F)


def _coeff_inner(Fa, Fb) -> complex:
    """Frobenius inner product trace(Fa^H Fb) for any coefficient kinds."""
    if isinstance(Fa, LowRankMatrix) and isinstance(Fb, LowRankMatrix):
        # trace((A B^T)^H (C D^T)) = trace((A^H C)(D^T conj(B)))
        P = Fa.A.conj().T @ Fb.A
        Q = Fb.B.T @ Fa.B.conj()
        return complex(np.trace(P @ Q))
    if isinstance(Fa, LowRankMatrix):
        # trace((A B^T)^H Fb) = vdot(A, Fb @ conj(B))
        Y = Fb @ Fa.B.conj()
        return complex(np.vdot(Fa.A, np.asarray(Y)))
    if isinstance(Fb, LowRankMatrix):
        return complex(np.conj(_coeff_inner(Fb, Fa)))
    if sp.issparse(Fa) or sp.issparse(Fb):
        A = Fa.tocsr() if sp.issparse(Fa) else sp.csr_matrix(Fa)
        B = Fb.tocsr() if sp.issparse(Fb) else sp.csr_matrix(Fb)
        return complex(A.conj().multiply(B).sum())
    return complex(np.vdot(np.asarray(Fa), np.asarray(Fb)))


class SplitNEP:
    """Nonlinear eigenvalue problem in split form.

    Weights, when supplied, are folded into the stored coefficients at
    construction (the original values stay available on ``weights``), so all
    downstream formulas can treat the problem as unweighted.
    """

    def __init__(
        self,
        coeffs: Sequence,
        funcs: Sequence[ScalarFunction],
        weights: Sequence[float] | None = None,
        specs: Sequence | None = None,
    ):
        if len(coeffs) == 0:
            raise ValueError("a split-form problem needs at least one term")
        if len(coeffs) != len(funcs):
            raise ValueError("coefficient and function counts differ")
        n = coeffs[0].shape[0]
        for j, F in enumerate(coeffs):
            if F.shape != (n, n):
                raise ValueError(f"coefficient {j} is not {n} x {n}: {F.shape}")
            if isinstance(F, np.ndarray) and not np.all(np.isfinite(F)):
                raise ValueError(f"coefficient {j} has non-finite entries")
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (len(coeffs),) or np.any(weights <= 0):
                raise ValueError("weights must be positive, one per term")
            coeffs = [
                LowRankMatrix(w * F.A, F.B) if isinstance(F, LowRankMatrix) else w * F
                for w, F in zip(weights, coeffs)
            ]
        self.coeffs = list(coeffs)
        self.funcs = list(funcs)
        self.weights = weights if weights is not None else np.ones(len(coeffs))
        self.specs = list(specs) if specs is not None else None
        self.n = n
        self.k = len(coeffs)
        self._gram = None

    def func_row(self, lam: complex) -> np.ndarray:
        return np.array([fj(lam) for fj in self.funcs])

    def dfunc_row(self, lam: complex) -> np.ndarray:
        return np.array([fj.df(lam) for fj in self.funcs])

    def evaluate(self, lam: complex, dense_limit: int = 4096):
        """F(lambda) as a dense array or a sparse matrix.

        Low-rank coefficients force densification, which is refused above
        ``dense_limit`` to avoid surprise memory blow-ups.
        """
        fs = self.func_row(lam)
        has_lowrank = any(isinstance(F, LowRankMatrix) for F in self.coeffs)
        all_sparse = all(sp.issparse(F) for F in self.coeffs)
        if all_sparse:
            out = fs[0] * self.coeffs[0].tocsr()
            for fj, F in zip(fs[1:], self.coeffs[1:]):
                out = out + fj * F.tocsr()
            return out
        if has_lowrank and self.n > dense_limit:
            raise ValueError(
                f"dense evaluation of an n={self.n} problem with low-rank "
                "coefficients was refused; raise dense_limit to override"
            )
        out = np.zeros((self.n, self.n), dtype=np.result_type(fs.dtype, float))
        for fj, F in zip(fs, self.coeffs):
            out = out + fj * coeff_dense(F)
        return out

    def derivative(self, lam: complex, dense_limit: int = 4096):
        """F'(lambda), with the same representation rules as evaluate()."""
        dfs = self.dfunc_row(lam)
        all_sparse = all(sp.issparse(F) for F in self.coeffs)
        if all_sparse:
            out = dfs[0] * self.coeffs[0].tocsr()
            for dfj, F in zip(dfs[1:], self.coeffs[1:]):
                out = out + dfj * F.tocsr()
            return out
        has_lowrank = any(isinstance(F, LowRankMatrix) for F in self.coeffs)
        if has_lowrank and self.n > dense_limit:
            raise ValueError("dense derivative refused at this size")
        out = np.zeros((self.n, self.n), dtype=np.result_type(dfs.dtype, float))
        for dfj, F in zip(dfs, self.coeffs):
            out = out + dfj * coeff_dense(F)
        return out

    def coefficient_norm(self) -> float:
        """Frobenius norm of the block row [F_1 ... F_k]."""
        return float(np.sqrt(sum(coeff_frobenius(F) ** 2 for F in self.coeffs)))

    def _coeff_gram(self) -> np.ndarray:
        if self._gram is None:
            k = self.k
            g = np.zeros((k, k), dtype=complex)
            for a in range(k):
                for b in range(a, k):
                    g[a, b] = _coeff_inner(self.coeffs[a], self.coeffs[b])
                    g[b, a] = np.conj(g[a, b])
            self._gram = g
        return self._gram

    def evaluate_norm(self, lam: complex) -> float:
        """||F(lambda)||_F computed from the k x k coefficient Gram matrix."""
        fs = self.func_row(lam)
        val = np.real(np.conj(fs) @ self._coeff_gram() @ fs)
        return float(np.sqrt(max(val, 0.0)))

    def is_real(self) -> bool:
        def _real(a) -> bool:
            return np.isrealobj(a) or not np.any(np.asarray(a).imag)

        for F in self.coeffs:
            if isinstance(F, LowRankMatrix):
                if not (_real(F.A) and _real(F.B)):
                    return False
            elif not _real(F.data if sp.issparse(F) else F):
                return False
        return True


class EigenpairSet:
    """p approximate eigenvalues with matched eigenvector columns."""

    def __init__(self, lambdas, V, normalize: bool = True):
        lambdas = np.atleast_1d(np.asarray(lambdas))
        V = np.asarray(V)
        if V.ndim != 2 or V.shape[1] != lambdas.shape[0]:
            raise ValueError("V must be n x p with one column per eigenvalue")
        if lambdas.size < 1:
            raise ValueError("at least one eigenpair is required")
        if normalize:
            norms = np.linalg.norm(V, axis=0)
            if np.any(norms == 0):
                raise ValueError("eigenvector columns must be nonzero")
            V = V / norms
        self.lambdas = lambdas
        self.V = V
        self.normalized = bool(normalize)

    @property
    def p(self) -> int:
        return self.lambdas.size

    @property
    def n(self) -> int:
        return self.V.shape[0]

    def normalized_copy(self) -> "EigenpairSet":
        if self.normalized:
            return self
        return EigenpairSet(self.lambdas, self.V, normalize=True)

    def is_real(self) -> bool:
        lam_real = np.isrealobj(self.lambdas) or not np.any(self.lambdas.imag)
        v_real = np.isrealobj(self.V) or not np.any(self.V.imag)
        return bool(lam_real and v_real)


@dataclass(frozen=True)
class InvariantPair:
    """(V, M) with sum_j F_j V f_j(M) = 0 when exact."""

    V: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("M must be square")
        if np.asarray(self.V).shape[1] != M.shape[0]:
            raise ValueError("V column count must match the order of M")


@dataclass
class ResidualBundle:
    """R = sum_j F_j V f_j(Lambda) along with the G and W factors."""

    R: np.ndarray
    G: np.ndarray
    W: np.ndarray  # stacked blocks V f_j(Lambda), shape (k*n, p)
    res_norm: float
    col_norms: np.ndarray

    def W_blocks(self) -> list[np.ndarray]:
        n = self.R.shape[0]
        k = self.W.shape[0] // n
        return [self.W[j * n : (j + 1) * n] for j in range(k)]


def function_matrix(nep: SplitNEP, lambdas: np.ndarray) -> np.ndarray:
    """G with G[i, j] = f_j(lambda_i)."""
    return np.array([[fj(lam) for fj in nep.funcs] for lam in np.atleast_1d(lambdas)])


def residual_bundle(nep: SplitNEP, pairs: EigenpairSet) -> ResidualBundle:
    if pairs.n != nep.n:
        raise ValueError(f"eigenvector dimension {pairs.n} != problem dimension {nep.n}")
    G = function_matrix(nep, pairs.lambdas)
    V = pairs.V
    blocks = []
    R = None
    for j, F in enumerate(nep.coeffs):
        FV = coeff_matmat(F, V)
        Rj = FV * G[:, j]
        R = Rj if R is None else R + Rj
        blocks.append(V * G[:, j])
    W = np.vstack(blocks)
    col = np.linalg.norm(R, axis=0)
    return ResidualBundle(R=R, G=G, W=W, res_norm=float(np.linalg.norm(R)), col_norms=col)


def invariant_residual(
    nep: SplitNEP, pair: InvariantPair, diag_cond_tol: float = 1e8
) -> tuple[np.ndarray, np.ndarray]:
    """Residual R = sum_j F_j V f_j(M) and Ghat = [f_1(M)^T ... f_k(M)^T].

    When the problem and the pair are real, the (analytically real) outputs
    are returned as real arrays even if M has complex-conjugate eigenvalues.
    """
    V = np.asarray(pair.V)
    M = np.asarray(pair.M)
    fM = [matrix_function(fj, M, diag_cond_tol) for fj in nep.funcs]
    R = None
    for j, F in enumerate(nep.coeffs):
        term = coeff_matmat(F, V) @ fM[j]
        R = term if R is None else R + term
    Ghat = np.hstack([f.T for f in fM])
    inputs_real = nep.is_real() and not np.iscomplexobj(V) and not np.iscomplexobj(M)
    if inputs_real:
        scale = max(np.abs(R).max(initial=0.0), np.abs(Ghat).max(initial=0.0), 1.0)
        if max(np.abs(R.imag).max(initial=0.0), np.abs(Ghat.imag).max(initial=0.0)) <= 1e-10 * scale:
            R = R.real.copy()
            Ghat = Ghat.real.copy()
    return R, Ghat
