"""Built-in test problems and perturbation ensembles for the benchmarks.

Problems are constructed deterministically from (name, n, seed).  The
perturbation generators draw log-uniform Frobenius magnitudes and respect the
per-coefficient structure when asked to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (
    EXP_NEG,
    EXP_NEG2,
    LAMBDA,
    LAMBDA2,
    NEG_LAMBDA,
    ONE,
    LowRankMatrix,
    SplitNEP,
    coeff_frobenius,
)
from .structures import StructureSpec


@dataclass
class GalleryProblem:
    name: str
    nep: SplitNEP
    specs: list[StructureSpec]
    seed: int = 0
    meta: dict | None = None


def beam_a0(n: int, dense: bool = False):
    """The stiffness-plus-feedback block matrix of the delayed beam problem."""
    if n < 2:
        raise ValueError("the beam problem needs n >= 2")
    main = np.full(n, -2.0)
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    # border blocks: A0 = [[tridiag(1,-2,1), -w^T], [-n w, n]] with w = (0,...,0,1)
    main[n - 1] = float(n)
    upper[n - 2] = -1.0
    lower[n - 2] = -float(n)
    A0 = sp.diags([lower, main, upper], offsets=[-1, 0, 1], format="csr")
    return A0.toarray() if dense else A0


def beam_a1(n: int, dense: bool = False):
    A1 = sp.csr_matrix(([1.0], ([n - 1], [n - 1])), shape=(n, n))
    return A1.toarray() if dense else A1


def build_beam(n: int, dense: bool = False) -> GalleryProblem:
    """Delay eigenvalue problem -lambda I + A0 + exp(-lambda) A1.

    Structures: scaled identity, the sparsity pattern of A0, and the single
    corner entry of A1.
    """
    A0 = beam_a0(n, dense)
    A1 = beam_a1(n, dense)
    I = np.eye(n) if dense else sp.identity(n, format="csr")
    nep = SplitNEP([I, A0, A1], [NEG_LAMBDA, ONE, EXP_NEG])
    specs = [
        StructureSpec.scaled_identity(),
        StructureSpec.sparsity_of(A0),
        StructureSpec.sparsity([(n - 1, n - 1)]),
    ]
    nep.specs = specs
    # the spectrum is essentially real, spread over [-4, 0]
    meta = {"n": n, "newton": {"start_interval": (-4.4, 0.4)}}
    return GalleryProblem("beam", nep, specs, meta=meta)


RANDOM_SPLIT_FUNCS = [ONE, LAMBDA, LAMBDA2, EXP_NEG, EXP_NEG2]


def build_random_split(n: int, seed: int = 0, symmetric: bool = False) -> GalleryProblem:
    """Random five-term family 1, lambda, lambda^2, exp(-lambda), exp(-2 lambda)
    with standard-normal coefficients; the lambda^2 coefficient is the identity."""
    rng = np.random.default_rng(seed)
    coeffs = []
    for j in range(5):
        if j == 2:
            coeffs.append(np.eye(n))
            continue
        A = rng.standard_normal((n, n))
        if symmetric:
            A = (A + A.T) / 2.0
        coeffs.append(A)
    nep = SplitNEP(coeffs, RANDOM_SPLIT_FUNCS)
    specs = [StructureSpec.symmetric() if symmetric else StructureSpec.unstructured()] * 5
    nep.specs = list(specs)
    meta = {"n": n}
    if symmetric:
        # stay in real arithmetic: real starts find the real eigenvalues the
        # symmetric backward-error formulas require
        meta["newton"] = {"start_interval": (-2.5, 2.5)}
    return GalleryProblem(
        "random-split" + ("-symmetric" if symmetric else ""), nep, list(specs), seed,
        meta=meta,
    )


def build_random_sparse_split(n: int, seed: int = 0, density: float = 0.05) -> GalleryProblem:
    """Random-split family with independent sparsity patterns imposed on the
    non-identity coefficients; the identity coefficient keeps a diagonal
    pattern."""
    rng = np.random.default_rng(seed)
    coeffs = []
    specs = []
    for j in range(5):
        if j == 2:
            coeffs.append(np.eye(n))
            specs.append(StructureSpec.sparsity([(i, i) for i in range(n)]))
            continue
        mask = rng.uniform(size=(n, n)) < density
        mask[np.arange(n), np.arange(n)] = True  # keep patterns nonsingular-ish
        A = rng.standard_normal((n, n)) * mask
        coeffs.append(A)
        specs.append(StructureSpec.sparsity([(int(a), int(b)) for a, b in np.argwhere(mask)]))
    nep = SplitNEP(coeffs, RANDOM_SPLIT_FUNCS)
    nep.specs = list(specs)
    return GalleryProblem("random-sparse-split", nep, list(specs), seed, meta={"n": n})


def build_quadratic_lowrank(n: int, seed: int = 0) -> GalleryProblem:
    """Quadratic problem A0 + lambda A1 + lambda^2 I with tridiagonal A0 and
    A1 = -U U^T of rank 2."""
    if n < 2:
        raise ValueError("n >= 2 required")
    rng = np.random.default_rng(seed)
    A0 = sp.diags(
        [np.ones(n - 1), np.full(n, -2.0), np.ones(n - 1)], offsets=[-1, 0, 1], format="csr"
    )
    U = rng.standard_normal((n, 2))
    A1 = LowRankMatrix(-U, U)
    A2 = sp.identity(n, format="csr")
    nep = SplitNEP([A0, A1, A2], [ONE, LAMBDA, LAMBDA2])
    specs = [
        StructureSpec.sparsity_of(A0),
        StructureSpec.fixed_rank(2),
        StructureSpec.scaled_identity(),
    ]
    nep.specs = specs
    meta = {"n": n, "U": U, "newton": {"start_interval": (-2.2, 2.2)}}
    return GalleryProblem("quadratic-lowrank", nep, specs, seed, meta=meta)


def default_newton_options(problem: GalleryProblem, **overrides):
    """NewtonOptions tuned to the problem's spectrum hints, if any."""
    from .newton import NewtonOptions

    hints = dict((problem.meta or {}).get("newton", {}))
    hints.update(overrides)
    return NewtonOptions(**hints)


# ---------------------------------------------------------------------------
# perturbation ensembles
# ---------------------------------------------------------------------------


def _scaled_lowrank_factor_perturbation(F: LowRankMatrix, direction: np.ndarray, mag: float):
    """Perturb the shared factor of -U U^T so the coefficient change has
    Frobenius norm mag; the perturbed coefficient keeps rank <= rank(U)."""
    U = -F.A  # stored as (-U, U)
    if mag == 0.0:
        return F, 0.0

    def delta_norm(s):
        Up = U + s * direction
        # || (U+sD)(U+sD)^T - U U^T ||_F via a small Gram computation
        A = np.hstack([Up, U])
        B = np.hstack([Up, -U])
        return float(np.sqrt(max(np.trace((A.T @ A) @ (B.T @ B)), 0.0)))

    lo, hi = 0.0, 1.0
    while delta_norm(hi) < mag and hi < 1e12:
        hi *= 2.0
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if delta_norm(mid) < mag:
            lo = mid
        else:
            hi = mid
    s = (lo + hi) / 2.0
    Up = U + s * direction
    return LowRankMatrix(-Up, Up), delta_norm(s)


def perturb_coefficient(F, spec: StructureSpec, mag: float, rng):
    """One structure-respecting perturbation of Frobenius magnitude mag.

    Returns (perturbed coefficient, actual magnitude).
    """
    n = F.shape[0]
    if mag == 0.0:
        return F, 0.0
    kind = spec.kind if spec is not None else "unstructured"
    if kind == "fixed-rank":
        if not isinstance(F, LowRankMatrix):
            raise ValueError("fixed-rank perturbations need a LowRankMatrix coefficient")
        D = rng.standard_normal(F.A.shape)
        return _scaled_lowrank_factor_perturbation(F, D, mag)
    if kind == "scaled-identity":
        c = mag / np.sqrt(n) * rng.choice([-1.0, 1.0])
        if sp.issparse(F):
            return F + c * sp.identity(n, format="csr"), abs(c) * np.sqrt(n)
        return F + c * np.eye(n), abs(c) * np.sqrt(n)
    if kind == "sparsity":
        pat = spec.pattern
        rows = np.array([a for a, _ in pat])
        cols = np.array([b for _, b in pat])
        vals = rng.standard_normal(len(pat))
        vals *= mag / max(np.linalg.norm(vals), 1e-300)
        D = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        if sp.issparse(F):
            return F + D, mag
        return np.asarray(F) + D.toarray(), mag
    if kind == "symmetric":
        D = rng.standard_normal((n, n))
        D = (D + D.T) / 2.0
        D *= mag / max(np.linalg.norm(D), 1e-300)
        return _densify(F) + D, mag
    # unstructured (or explicit subspace treated as unstructured sampling)
    if kind == "subspace":
        basis = spec.basis
        coeffs = rng.standard_normal(basis.dim)
        coeffs *= mag / max(np.linalg.norm(coeffs), 1e-300)
        return _densify(F) + basis.combine(coeffs), mag
    D = rng.standard_normal((n, n))
    D *= mag / max(np.linalg.norm(D), 1e-300)
    return _densify(F) + D, mag


def _densify(F):
    if isinstance(F, LowRankMatrix):
        return F.toarray()
    if sp.issparse(F):
        return F.toarray()
    return np.asarray(F)


def perturb_ensemble(
    problem: GalleryProblem,
    count: int,
    magnitude_range=(1e-12, 1e-1),
    seed: int = 0,
    structured: bool = True,
    relative: bool = True,
):
    """Yield (perturbed SplitNEP, per-term magnitudes, total magnitude).

    Magnitudes are log-uniform in magnitude_range; with relative=True they
    scale with each coefficient's Frobenius norm, otherwise they are absolute
    per-term Frobenius norms.  With structured=True each perturbation is
    drawn inside its coefficient's structure class.
    """
    rng = np.random.default_rng(seed)
    nep = problem.nep
    lo, hi = magnitude_range
    zero_magnitude = lo == 0.0 and hi == 0.0
    if not zero_magnitude and (lo <= 0 or hi < lo):
        raise ValueError("magnitude_range must be positive and ordered (or (0, 0))")
    for _ in range(count):
        rel = 0.0 if zero_magnitude else np.exp(rng.uniform(np.log(lo), np.log(hi)))
        new_coeffs = []
        mags = []
        for j, F in enumerate(nep.coeffs):
            spec = problem.specs[j] if structured else StructureSpec.unstructured()
            if relative:
                target = rel * max(coeff_frobenius(F), 1.0)
            else:
                target = rel
            Fp, actual = perturb_coefficient(F, spec, target, rng)
            new_coeffs.append(Fp)
            mags.append(actual)
        pert = SplitNEP(new_coeffs, nep.funcs)
        pert.specs = problem.specs
        yield pert, np.array(mags), float(np.linalg.norm(mags))
