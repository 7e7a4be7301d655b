"""Newton iteration on the bordered system for approximate eigenpairs.

The iteration solves [F(lambda) v; c^T v - 1] = 0 in the unknowns (v, lambda)
with a fixed normalization vector c.  The bordered Jacobian solve dispatches
on the coefficient representation: dense LU, sparse LU, or sparse LU plus a
Woodbury correction when low-rank coefficients are present.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import EigenpairSet, LowRankMatrix, SplitNEP


@dataclass
class NewtonOptions:
    max_iter: int = 50
    tol: float = 1e-12          # on ||F(lambda) v|| relative to ||F(lambda)||_F
    c: np.ndarray | None = None  # normalization vector, defaults to ones/sqrt(n)
    start_radius: float = 2.0    # disk radius for random starts
    start_center: complex = 0.0
    start_interval: tuple[float, float] | None = None  # sample real starts instead
    dedup_tol: float = 1e-8


@dataclass
class NewtonReport:
    lam: complex
    v: np.ndarray
    residuals: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    message: str = ""


def _split_terms(nep: SplitNEP):
    """Partition coefficients into sparse/dense material and low-rank pairs."""
    material = []
    lowrank = []
    for j, F in enumerate(nep.coeffs):
        if isinstance(F, LowRankMatrix):
            lowrank.append((j, F))
        else:
            material.append((j, F))
    return material, lowrank


def _bordered_solve(
    nep: SplitNEP, lam: complex, v: np.ndarray, c: np.ndarray, rhs: np.ndarray,
    border_col: np.ndarray | None = None,
):
    """Solve the (n+1) x (n+1) bordered system [[F, b], [c^T, 0]] x = rhs.

    The border column b is F'(lambda) v by default (the Newton Jacobian);
    passing b = c gives the nonsingular bordered inverse-iteration matrix
    used to seed starting vectors.
    """
    n = nep.n
    fs = nep.func_row(lam)
    dfs = nep.dfunc_row(lam)
    material, lowrank = _split_terms(nep)

    if border_col is not None:
        dFv = np.asarray(border_col, dtype=complex)
    else:
        # F'(lambda) v is cheap for every representation
        dFv = np.zeros(n, dtype=complex)
        for j, F in material:
            dFv += dfs[j] * np.asarray(F @ v).ravel()
        for j, F in lowrank:
            dFv += dfs[j] * F.matmat(v[:, None]).ravel()

    all_dense = all(isinstance(F, np.ndarray) for _, F in material) and not lowrank
    if all_dense and n <= 2048:
        J = np.zeros((n + 1, n + 1), dtype=complex)
        J[:n, :n] = sum(fs[j] * F for j, F in material)
        J[:n, n] = dFv
        J[n, :n] = c
        return np.linalg.solve(J, rhs)

    # sparse material part, bordered
    S = None
    for j, F in material:
        Fc = F.tocsc() if sp.issparse(F) else sp.csc_matrix(F)
        S = fs[j] * Fc if S is None else S + fs[j] * Fc
    if S is None:
        S = sp.csc_matrix((n, n), dtype=complex)
    B = sp.bmat(
        [[S.astype(complex), sp.csc_matrix(dFv[:, None])],
         [sp.csc_matrix(c[None, :]), None]],
        format="csc",
    )
    lu = spla.splu(B)
    if not lowrank:
        return lu.solve(rhs)

    # Woodbury: bordered matrix + sum_j f_j * A_j B_j^T padded with a zero row
    As = [np.vstack([fs[j] * F.A, np.zeros((1, F.A.shape[1]))]) for j, F in lowrank]
    Bs = [np.vstack([F.B, np.zeros((1, F.B.shape[1]))]) for j, F in lowrank]
    Aw = np.hstack(As).astype(complex)
    Bw = np.hstack(Bs).astype(complex)
    y = lu.solve(rhs)
    Z = lu.solve(Aw)
    core = np.eye(Aw.shape[1], dtype=complex) + Bw.T @ Z
    correction = Z @ np.linalg.solve(core, Bw.T @ y)
    return y - correction


def _apply_F(nep: SplitNEP, lam: complex, v: np.ndarray) -> np.ndarray:
    fs = nep.func_row(lam)
    out = np.zeros(nep.n, dtype=complex)
    for j, F in enumerate(nep.coeffs):
        if isinstance(F, LowRankMatrix):
            out += fs[j] * F.matmat(v[:, None]).ravel()
        else:
            out += fs[j] * np.asarray(F @ v).ravel()
    return out


def newton_eigenpair(
    nep: SplitNEP, lam0: complex, v0: np.ndarray | None = None,
    opts: NewtonOptions | None = None,
) -> NewtonReport:
    """Run Newton on the bordered eigenpair system from one starting point.

    On success the returned v has unit 2-norm and ||F(lam) v||_2 <= tol *
    ||F(lam)||_F.  Singular Jacobians and stagnation are reported in the
    message, never raised.
    """
    opts = opts or NewtonOptions()
    n = nep.n
    c = opts.c if opts.c is not None else np.ones(n) / np.sqrt(n)
    c = np.asarray(c, dtype=complex)
    lam = complex(lam0)

    if v0 is None:
        # bordered inverse iteration: [[F, c], [c^T, 0]] [v; s] = [0; 1]
        try:
            rhs0 = np.zeros(n + 1, dtype=complex)
            rhs0[n] = 1.0
            x = _bordered_solve(nep, lam, np.zeros(n, dtype=complex), c, rhs0, border_col=c)
            v = x[:n]
            if np.linalg.norm(v) < 1e-14:
                v = np.ones(n, dtype=complex)
        except (np.linalg.LinAlgError, RuntimeError):
            v = np.ones(n, dtype=complex)
    else:
        v = np.asarray(v0, dtype=complex).copy()
    scale = c @ v
    if abs(scale) < 1e-14:
        v = v + c
        scale = c @ v
    v = v / scale

    report = NewtonReport(lam=lam, v=v)
    for it in range(opts.max_iter + 1):
        Fv = _apply_F(nep, lam, v)
        res = float(np.linalg.norm(Fv))
        report.residuals.append(res)
        fnorm = nep.evaluate_norm(lam)
        if res <= opts.tol * fnorm and abs(c @ v - 1.0) < 1e-8:
            vn = v / np.linalg.norm(v)
            report.lam, report.v = lam, vn
            report.converged = True
            report.iterations = it
            report.message = "converged"
            return report
        if it == opts.max_iter:
            break
        rhs = -np.concatenate([Fv, [c @ v - 1.0]])
        try:
            step = _bordered_solve(nep, lam, v, c, rhs)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            report.lam, report.v = lam, v
            report.iterations = it
            report.message = f"singular Jacobian at iteration {it}: {exc}"
            return report
        v = v + step[:n]
        lam = lam + step[n]
        if not np.isfinite(lam) or not np.all(np.isfinite(v)):
            report.lam, report.v = lam, v
            report.iterations = it
            report.message = "iteration diverged"
            return report

    report.lam, report.v = lam, v / max(np.linalg.norm(v), 1e-300)
    report.iterations = opts.max_iter
    report.message = f"no convergence in {opts.max_iter} iterations"
    return report


def collect_pairs(
    nep: SplitNEP,
    p: int,
    starts=None,
    seed: int = 0,
    opts: NewtonOptions | None = None,
) -> tuple[EigenpairSet, list[NewtonReport]]:
    """Gather p distinct converged eigenpairs from multiple Newton starts.

    ``starts`` is either a list of starting values (lambda or (lambda, v))
    or a count of random starts drawn from a disk of radius
    ``opts.start_radius``.  Converged eigenvalues closer than dedup_tol
    (relative to the largest magnitude) are merged.  A partial set is
    returned with a warning when fewer than p pairs are found.
    """
    opts = opts or NewtonOptions()
    rng = np.random.default_rng(seed)
    if starts is None:
        starts = max(4 * p, 12)
    if isinstance(starts, int):
        if opts.start_interval is not None:
            lo, hi = opts.start_interval
            start_list = list(opts.start_center + rng.uniform(lo, hi, starts))
        else:
            radii = opts.start_radius * np.sqrt(rng.uniform(0, 1, starts))
            angles = rng.uniform(0, 2 * np.pi, starts)
            start_list = [opts.start_center + r * np.exp(1j * a) for r, a in zip(radii, angles)]
    else:
        start_list = list(starts)

    found_lams: list[complex] = []
    found_vs: list[np.ndarray] = []
    reports: list[NewtonReport] = []
    for s in start_list:
        lam0, v0 = (s if isinstance(s, tuple) else (s, None))
        rep = newton_eigenpair(nep, lam0, v0, opts)
        reports.append(rep)
        if not rep.converged:
            continue
        lmax = max([abs(rep.lam)] + [abs(l) for l in found_lams] + [1.0])
        if all(abs(rep.lam - l) > opts.dedup_tol * lmax for l in found_lams):
            found_lams.append(rep.lam)
            found_vs.append(rep.v)
        if len(found_lams) >= p:
            break

    if not found_lams:
        raise RuntimeError("no Newton start converged; widen the start disk or loosen tol")
    if len(found_lams) < p:
        warnings.warn(
            f"only {len(found_lams)} of the requested {p} eigenpairs converged",
            RuntimeWarning,
        )
    V = np.column_stack(found_vs[:p])
    return EigenpairSet(np.array(found_lams[:p]), V, normalize=True), reports
