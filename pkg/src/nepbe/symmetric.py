"""Real-symmetric backward errors: explicit minimal construction and the
cheap norm-product bound.

After rotating by the orthogonal factor Q of V = Q [T; 0], the constraint
decouples into a (n-p) x p block solved by one pseudoinverse application and
a small coupled system enforcing symmetry of the leading p x p blocks through
commutation-matrix rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EigenpairSet, SplitNEP, coeff_dense, function_matrix
from .linalg import (
    DEFAULT_RANK_TOL,
    commutation,
    economy_qr,
    svd_pseudoinverse,
    vec,
)
from .unstructured import PerturbationSet

SYMMETRY_TOL = 1e-12


@dataclass
class SymmetricWorkspace:
    """Shared factorization pieces for the symmetric formulas."""

    Q: np.ndarray          # n x n orthogonal
    Ttilde: np.ndarray     # kp x p stacked T f_j(Lambda)
    B1: np.ndarray         # p x p
    B2: np.ndarray         # (n-p) x p
    M_S: np.ndarray        # (p^2 + k p^2) x (k p^2)
    R: np.ndarray
    res_norm: float
    G: np.ndarray


@dataclass
class SymmetricBound:
    """Upper bounds on the symmetric backward error.

    ``headline`` is the conservative maximum of the two square-root variants
    (pseudoinverse of Ttilde per the minimal construction, plain Ttilde per
    the reported closed form); only the pseudoinverse variant is guaranteed.
    """

    headline: float
    sqrt_pinv_form: float
    sqrt_plain_form: float
    res_norm: float


@dataclass
class SymmetricResult:
    perturbation: PerturbationSet
    eta: float
    workspace: SymmetricWorkspace
    b2_consistent: bool


def _check_real_symmetric(nep: SplitNEP) -> list[np.ndarray]:
    coeffs = []
    for j, F in enumerate(nep.coeffs):
        Fd = coeff_dense(F)
        if np.iscomplexobj(Fd):
            if np.abs(Fd.imag).max(initial=0.0) > SYMMETRY_TOL * max(np.abs(Fd).max(initial=0.0), 1.0):
                raise ValueError(f"coefficient {j} is not real")
            Fd = Fd.real
        nrm = max(np.linalg.norm(Fd), 1e-300)
        if np.linalg.norm(Fd - Fd.T) > SYMMETRY_TOL * nrm:
            raise ValueError(f"coefficient {j} is not symmetric")
        coeffs.append(Fd)
    return coeffs


def _real_pairs(pairs: EigenpairSet) -> tuple[np.ndarray, np.ndarray]:
    if not pairs.is_real():
        raise ValueError(
            "symmetric backward errors require real eigenpairs; supply "
            "complex-conjugate pairs as a real invariant pair instead"
        )
    return np.real(pairs.lambdas), np.real(pairs.V)


def symmetric_workspace(nep: SplitNEP, pairs: EigenpairSet) -> SymmetricWorkspace:
    coeffs = _check_real_symmetric(nep)
    lambdas, V = _real_pairs(pairs)
    n, p = V.shape
    if n < p:
        raise ValueError("more eigenpairs than dimensions")
    G = np.real(function_matrix(nep, lambdas))
    k = nep.k
    Q, T = economy_qr(V, full=True)
    Ttilde = np.vstack([T * G[:, j] for j in range(k)])  # blocks T f_j(Lambda)
    R = np.zeros((n, p))
    for j, F in enumerate(coeffs):
        R += (F @ V) * G[:, j]
    B = -(Q.T @ R)
    B1, B2 = B[:p], B[p:]
    Pi = commutation(p)
    top = np.kron(Ttilde.T, np.eye(p))  # p^2 x k p^2
    sym_rows = np.kron(np.eye(k), Pi - np.eye(p * p))
    M_S = np.vstack([top, sym_rows])
    return SymmetricWorkspace(
        Q=Q, Ttilde=Ttilde, B1=B1, B2=B2, M_S=M_S, R=R,
        res_norm=float(np.linalg.norm(R)), G=G,
    )


def symmetric_backward_error(
    nep: SplitNEP, pairs: EigenpairSet, rank_tol: float = DEFAULT_RANK_TOL
) -> SymmetricResult:
    """Minimal real-symmetric perturbations making the eigenpairs exact.

    Each delta_F_j is Q [[A11_j, A21_j^T], [A21_j, 0]] Q^T with the trailing
    block chosen zero; the A21 blocks come from one pseudoinverse of the
    stacked Ttilde and the A11 blocks from the minimum-norm solution of the
    symmetry-constrained small system.
    """
    ws = symmetric_workspace(nep, pairs)
    n = nep.n
    k = nep.k
    p = ws.B1.shape[0]

    Tt_pinv, _ = svd_pseudoinverse(ws.Ttilde, rank_tol)
    A21_stack = ws.B2 @ Tt_pinv  # (n-p) x kp
    proj = ws.B2 @ (Tt_pinv @ ws.Ttilde)
    b2_norm = max(np.linalg.norm(ws.B2), 1e-300)
    b2_consistent = bool(np.linalg.norm(proj - ws.B2) <= 1e-10 * b2_norm)

    rhs = np.concatenate([vec(ws.B1), np.zeros(k * p * p)])
    sol_x, _ = _min_norm(ws.M_S, rhs, rank_tol)

    terms = []
    eta_sq = 0.0
    for j in range(k):
        A11 = sol_x[j * p * p : (j + 1) * p * p].reshape((p, p), order="F")
        A21 = A21_stack[:, j * p : (j + 1) * p]
        block = np.zeros((n, n))
        block[:p, :p] = A11
        block[:p, p:] = A21.T
        block[p:, :p] = A21
        terms.append(ws.Q @ block @ ws.Q.T)
        eta_sq += np.linalg.norm(A11) ** 2 + 2.0 * np.linalg.norm(A21) ** 2
    pset = PerturbationSet.from_dense(terms)
    eta = float(np.sqrt(eta_sq))
    pset.eta = eta
    return SymmetricResult(pset, eta, ws, b2_consistent)


def _min_norm(A, b, rank_tol):
    from .linalg import min_norm_solve

    sol = min_norm_solve(A, b, rank_tol)
    return sol.x, sol.rank


def symmetric_bound(
    nep: SplitNEP, pairs: EigenpairSet, rank_tol: float = DEFAULT_RANK_TOL,
    workspace: SymmetricWorkspace | None = None,
) -> SymmetricBound:
    """Cheap upper bound sqrt(||M_S^+||_F^2 + 2 ||Ttilde^+||_F^2) ||R||_F.

    The variant with ||Ttilde||_F in place of the pseudoinverse is computed
    and reported as well; the headline value is the maximum of the two.
    """
    ws = workspace if workspace is not None else symmetric_workspace(nep, pairs)
    s_ms = np.linalg.svd(ws.M_S, compute_uv=False)
    keep = s_ms > rank_tol * s_ms[0] if s_ms.size and s_ms[0] > 0 else np.zeros(0, bool)
    ms_pinv_fro_sq = float(np.sum(1.0 / s_ms[keep] ** 2)) if np.any(keep) else 0.0
    s_tt = np.linalg.svd(ws.Ttilde, compute_uv=False)
    keep_t = s_tt > rank_tol * s_tt[0] if s_tt.size and s_tt[0] > 0 else np.zeros(0, bool)
    tt_pinv_fro_sq = float(np.sum(1.0 / s_tt[keep_t] ** 2)) if np.any(keep_t) else 0.0
    tt_fro_sq = float(np.linalg.norm(ws.Ttilde) ** 2)

    sqrt_pinv = float(np.sqrt(ms_pinv_fro_sq + 2.0 * tt_pinv_fro_sq) * ws.res_norm)
    sqrt_plain = float(np.sqrt(ms_pinv_fro_sq + 2.0 * tt_fro_sq) * ws.res_norm)
    return SymmetricBound(
        headline=max(sqrt_pinv, sqrt_plain),
        sqrt_pinv_form=sqrt_pinv,
        sqrt_plain_form=sqrt_plain,
        res_norm=ws.res_norm,
    )
