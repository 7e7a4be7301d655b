"""Exact unstructured backward error of eigenpair sets and computable bounds.

The exact value comes from the minimum-norm solution of the stacked linear
system in the coefficient perturbations; that solution is never formed as a
dense k*n^2 vector here.  Instead the minimal perturbations are kept in the
rank-factored form delta_F_j = -R @ M_j^T with a shared left factor R (the
residual matrix), which also makes their norms cheap to evaluate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EigenpairSet, ResidualBundle, SplitNEP, function_matrix, residual_bundle
from .linalg import DEFAULT_RANK_TOL, economy_qr, khatri_rao_t, svd_pseudoinverse


class PerturbationSet:
    """Coefficient perturbations delta_F_1 ... delta_F_k.

    Stored either densely or in rank-factored form with a shared left factor:
    ``delta_F_j = -left @ rights[j].T``.  ``eta`` is the Frobenius norm of the
    block row [delta_F_1, ..., delta_F_k].
    """

    def __init__(self, mode, eta, left=None, rights=None, terms=None,
                 consistent=True, lsq_residual_norm=0.0):
        if mode not in ("factored", "dense"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.eta = float(eta)
        self.left = left
        self.rights = rights
        self.terms = terms
        self.consistent = bool(consistent)
        self.lsq_residual_norm = float(lsq_residual_norm)

    @classmethod
    def from_factored(cls, left: np.ndarray, rights: list[np.ndarray]) -> "PerturbationSet":
        # ||R M_j^T||_F = ||T_R M_j^T||_F with R = Q T_R, so eta costs O(n p^2) per term
        n, p = left.shape
        if p > 0 and n >= p:
            _, T = economy_qr(left)
        else:
            T = left
        eta_sq = 0.0
        for Mj in rights:
            eta_sq += float(np.linalg.norm(T @ Mj.T) ** 2)
        return cls("factored", np.sqrt(eta_sq), left=left, rights=list(rights))

    @classmethod
    def from_dense(cls, terms: list[np.ndarray], consistent=True, lsq_residual_norm=0.0) -> "PerturbationSet":
        eta = float(np.sqrt(sum(np.linalg.norm(t) ** 2 for t in terms)))
        return cls("dense", eta, terms=[np.asarray(t) for t in terms],
                   consistent=consistent, lsq_residual_norm=lsq_residual_norm)

    @property
    def k(self) -> int:
        return len(self.rights) if self.mode == "factored" else len(self.terms)

    def term(self, j: int) -> np.ndarray:
        if self.mode == "dense":
            return self.terms[j]
        return -self.left @ self.rights[j].T

    def dense_terms(self) -> list[np.ndarray]:
        return [self.term(j) for j in range(self.k)]

    def term_norms(self) -> np.ndarray:
        if self.mode == "dense":
            return np.array([np.linalg.norm(t) for t in self.terms])
        _, T = economy_qr(self.left)
        return np.array([np.linalg.norm(T @ Mj.T) for Mj in self.rights])

    def perturbed_residual_norm(self, bundle: ResidualBundle) -> float:
        """||sum_j (F_j + delta_F_j) V f_j(Lambda)||_F for the bundle's pairs."""
        W_blocks = bundle.W_blocks()
        if self.mode == "factored":
            p = bundle.R.shape[1]
            S = np.zeros((p, p), dtype=np.result_type(self.left, bundle.W))
            for Mj, Wj in zip(self.rights, W_blocks):
                S += Mj.T @ Wj
            return float(np.linalg.norm(bundle.R - self.left @ S))
        Rp = bundle.R.astype(np.result_type(bundle.R, *self.terms), copy=True)
        for t, Wj in zip(self.terms, W_blocks):
            Rp += t @ Wj
        return float(np.linalg.norm(Rp))


@dataclass
class BoundsReport:
    """Computable bounds on the backward error of a set of eigenpairs.

    Infinite values are reported as ``inf`` (rank-deficient G or V);
    fields that do not apply are left as None.
    """

    eta_exact: float | None = None
    upper_krt: float | None = None       # sigma_phat(G krt V^T)^{-1} ||R||_F
    upper_G_kappa: float | None = None   # sigma_p(G)^{-1} kappa_2(V) ||R||_F
    upper_G: float | None = None         # sigma_p(G)^{-1} ||R||_F, only when p <= k
    upper_sv: float | None = None        # eigenvalue-only upper bound
    lower_sv: float | None = None        # eigenvalue-only lower bound
    sigma_hats: np.ndarray | None = None
    krt_rank: int | None = None
    res_norm: float | None = None
    rescaled: bool = False


def _krt_matrix(G: np.ndarray, V: np.ndarray) -> np.ndarray:
    return khatri_rao_t(G, V.T)


def backward_error_exact(
    nep: SplitNEP, pairs: EigenpairSet, rank_tol: float = DEFAULT_RANK_TOL
) -> PerturbationSet:
    """Minimal-norm perturbations making the given eigenpairs exact.

    Returns the perturbations in rank-factored form; ``eta`` is the backward
    error.  The underlying linear system is always consistent (perturbing
    every coefficient to zero is feasible), so the perturbed residual
    vanishes up to roundoff.
    """
    bundle = residual_bundle(nep, pairs)
    M = _krt_matrix(bundle.G, pairs.V)
    Mpinv, _ = svd_pseudoinverse(M, rank_tol)
    n, k = nep.n, nep.k
    # delta_F_j = -R M_j^T with M_j the j-th n x p block of pinv(M)
    rights = [Mpinv[j * n : (j + 1) * n, :] for j in range(k)]
    return PerturbationSet.from_factored(bundle.R, rights)


def bounds_with_eigenvectors(nep: SplitNEP, pairs: EigenpairSet,
                             rank_tol: float = DEFAULT_RANK_TOL) -> BoundsReport:
    """Exact backward error plus the explicit upper bounds.

    Eigenvectors are normalized to unit columns internally when needed (the
    backward error itself is invariant under column scaling); the report
    flags the rescale.
    """
    rescaled = False
    if not pairs.normalized:
        pairs = pairs.normalized_copy()
        rescaled = True
    bundle = residual_bundle(nep, pairs)
    res = bundle.res_norm
    M = _krt_matrix(bundle.G, pairs.V)
    smw = np.linalg.svd(M, compute_uv=False)
    krt_rank = int(np.count_nonzero(smw > rank_tol * smw[0])) if smw.size and smw[0] > 0 else 0
    sigma_phat = smw[krt_rank - 1] if krt_rank > 0 else 0.0
    upper_krt = res / sigma_phat if sigma_phat > 0 else (0.0 if res == 0 else np.inf)

    p, k = bundle.G.shape
    sG = np.linalg.svd(bundle.G, compute_uv=False)
    # G is p x k: its p-th singular value exists only when p <= k
    sigma_p_G = sG[p - 1] if p <= k else 0.0
    sV = np.linalg.svd(pairs.V, compute_uv=False)
    kappa_V = sV[0] / sV[-1] if sV[-1] > 0 else np.inf

    upper_G_kappa = None
    if p <= k * nep.n:
        if sigma_p_G > 0 and np.isfinite(kappa_V):
            upper_G_kappa = kappa_V * res / sigma_p_G
        else:
            upper_G_kappa = 0.0 if res == 0 else np.inf
    upper_G = None
    if p <= k:
        upper_G = res / sigma_p_G if sigma_p_G > 0 else (0.0 if res == 0 else np.inf)

    pset = backward_error_exact(nep, pairs, rank_tol)
    return BoundsReport(
        eta_exact=pset.eta,
        upper_krt=upper_krt,
        upper_G_kappa=upper_G_kappa,
        upper_G=upper_G,
        krt_rank=krt_rank,
        res_norm=res,
        rescaled=rescaled,
    )


def smallest_singular_triplets(nep: SplitNEP, lambdas) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smallest singular value and vectors of F(lambda_i) for each i.

    Returns (sigma_hats, U, V) where column i of U / V is the left / right
    singular vector of F(lambda_i) for its smallest singular value.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas))
    n = nep.n
    sigmas = np.empty(lambdas.size)
    U = np.empty((n, lambdas.size), dtype=complex)
    V = np.empty((n, lambdas.size), dtype=complex)
    for i, lam in enumerate(lambdas):
        Fl = nep.evaluate(lam)
        Fl = Fl.toarray() if hasattr(Fl, "toarray") else np.asarray(Fl)
        Uf, s, Vh = np.linalg.svd(Fl)
        sigmas[i] = s[-1]
        U[:, i] = Uf[:, -1]
        V[:, i] = Vh[-1].conj()
    return sigmas, U, V


def bounds_eigenvalues_only(nep: SplitNEP, lambdas,
                            rank_tol: float = DEFAULT_RANK_TOL) -> BoundsReport:
    """Bounds on the eigenvalue-only backward error.

    Eigenvectors are taken as the right singular vectors of F(lambda_i)
    associated with the smallest singular value sigma_hat_i.  The lower bound
    holds against any eigenvector choice; the upper bound certifies the
    backward error of the constructed eigenpairs.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas))
    sigmas, _, V = smallest_singular_triplets(nep, lambdas)
    G = function_matrix(nep, lambdas)
    p = lambdas.size
    row_norms = np.linalg.norm(G, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(row_norms > 0, sigmas / row_norms, np.inf)
        ratios = np.where(sigmas == 0, 0.0, ratios)
    lower = float(np.max(ratios))

    M = khatri_rao_t(G, V.T)
    smw = np.linalg.svd(M, compute_uv=False)
    krt_rank = int(np.count_nonzero(smw > rank_tol * smw[0])) if smw.size and smw[0] > 0 else 0
    sigma_phat = smw[krt_rank - 1] if krt_rank > 0 else 0.0
    smax = float(np.max(sigmas))
    if smax == 0.0:
        upper_sv = 0.0
        upper_krt = 0.0
    elif sigma_phat > 0:
        upper_sv = np.sqrt(p) * smax / sigma_phat
        upper_krt = float(np.linalg.norm(sigmas)) / sigma_phat
    else:
        upper_sv = np.inf
        upper_krt = np.inf

    return BoundsReport(
        lower_sv=lower,
        upper_sv=upper_sv,
        upper_krt=upper_krt,
        sigma_hats=sigmas,
        krt_rank=krt_rank,
        res_norm=float(np.linalg.norm(sigmas)),
    )
