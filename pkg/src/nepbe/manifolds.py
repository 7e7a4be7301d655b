"""Embedded manifold geometry for structure-preserving coefficient sets.

Three per-coefficient manifolds are supported: matrices with a fixed sparsity
pattern, real multiples of the identity, and matrices of fixed rank r in the
embedded (U, S, V) geometry.  Ambient vectors (Euclidean gradients, Hessian
expressions) are never materialized densely; they are carried as a sum of
low-rank factor pairs plus an optional coordinate-sparse part plus an optional
multiple of the identity, which is exactly the shape the penalized objective
produces.  Projections then run at the advertised costs: O(p |J|) for sparse
patterns, O(n p^2) for the identity trace, O(n r (p + r)) for fixed rank.

All manifold arithmetic is real float64; the hot pattern kernels dispatch to
numba when available (see _kernels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels as K
from .core import LowRankMatrix


class RetractionError(RuntimeError):
    """Raised when a fixed-rank retraction collapses below the target rank."""


class Ambient:
    """Ambient n x n vector as sum(A_i B_i^T) + sparse-on-pattern + c * I."""

    def __init__(self, n: int):
        self.n = n
        self.pairs: list[tuple[np.ndarray, np.ndarray]] = []
        self.coo: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.ident: float = 0.0

    def add_pair(self, A: np.ndarray, B: np.ndarray) -> "Ambient":
        if A.shape != B.shape or A.shape[0] != self.n:
            raise ValueError("ambient factor pair must be two n x q arrays")
        self.pairs.append((A, B))
        return self

    def add_coo(self, rows, cols, vals) -> "Ambient":
        if self.coo is not None:
            raise ValueError("only one sparse term per ambient vector is supported")
        self.coo = (rows, cols, vals)
        return self

    def add_identity(self, c: float) -> "Ambient":
        self.ident += float(c)
        return self

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, X.shape[1]))
        for A, B in self.pairs:
            out += A @ (B.T @ X)
        if self.coo is not None:
            rows, cols, vals = self.coo
            K.coo_matmat(rows, cols, vals, X, out)
        if self.ident:
            out += self.ident * X
        return out

    def apply_t(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, X.shape[1]))
        for A, B in self.pairs:
            out += B @ (A.T @ X)
        if self.coo is not None:
            rows, cols, vals = self.coo
            K.coo_rmatmat(rows, cols, vals, X, out)
        if self.ident:
            out += self.ident * X
        return out

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for A, B in self.pairs:
            out += A @ B.T
        if self.coo is not None:
            rows, cols, vals = self.coo
            np.add.at(out, (rows, cols), vals)
        if self.ident:
            out += self.ident * np.eye(self.n)
        return out

    def trace(self) -> float:
        t = self.ident * self.n
        for A, B in self.pairs:
            t += float(np.sum(A * B))
        if self.coo is not None:
            rows, cols, vals = self.coo
            diag = rows == cols
            t += float(np.sum(vals[diag]))
        return t


# ---------------------------------------------------------------------------
# per-coefficient manifolds
# ---------------------------------------------------------------------------


class SparsePatternManifold:
    """Matrices supported on a fixed coordinate pattern (a flat manifold).

    Points and tangents are value arrays over the pattern.
    """

    kind = "sparsity"

    def __init__(self, n: int, pattern):
        pat = sorted({(int(a), int(b)) for a, b in pattern})
        if any(not (0 <= a < n and 0 <= b < n) for a, b in pat):
            raise ValueError("pattern index outside the matrix")
        self.n = n
        self.rows = np.array([a for a, _ in pat], dtype=np.int64)
        self.cols = np.array([b for _, b in pat], dtype=np.int64)
        self._diag_mask = self.rows == self.cols
        self.dim = len(pat)

    def from_matrix(self, F, tol: float = 1e-12):
        if isinstance(F, LowRankMatrix):
            F = F.toarray()
        if sp.issparse(F):
            Fd = F.tocsr()
            vals = np.asarray(Fd[self.rows, self.cols]).ravel().astype(float)
            C = Fd.tocoo()
            pattern = set(zip(self.rows.tolist(), self.cols.tolist()))
            off_sq = sum(
                float(abs(v)) ** 2
                for a, b, v in zip(C.row.tolist(), C.col.tolist(), C.data.tolist())
                if (a, b) not in pattern
            )
            off = np.sqrt(off_sq)
        else:
            Fd = np.asarray(F, dtype=float)
            vals = Fd[self.rows, self.cols].copy()
            mask = np.ones_like(Fd, dtype=bool)
            mask[self.rows, self.cols] = False
            off = float(np.linalg.norm(Fd[mask]))
        if off > tol * max(float(np.linalg.norm(vals)), 1.0):
            raise ValueError(
                f"matrix is not supported on the prescribed pattern (off-pattern norm {off:.3e})"
            )
        return vals

    def to_dense(self, point: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.rows, self.cols), point)
        return out

    def apply(self, point: np.ndarray, X: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, X.shape[1]))
        return K.coo_matmat(self.rows, self.cols, point, X, out)

    def tangent_apply(self, point, xi, X):
        return self.apply(xi, X)

    def tangent_ambient(self, point, xi) -> Ambient:
        return Ambient(self.n).add_coo(self.rows, self.cols, xi)

    def project(self, point, amb: Ambient) -> np.ndarray:
        vals = np.zeros(self.dim)
        for A, B in amb.pairs:
            vals += K.masked_rowcol_dot(A, B, self.rows, self.cols)
        if amb.coo is not None:
            rows, cols, cvals = amb.coo
            if rows is self.rows and cols is self.cols:
                vals += cvals
            else:  # general overlap, rare: go through a dict of the pattern
                vals += _coo_project(self.rows, self.cols, rows, cols, cvals)
        if amb.ident:
            vals[self._diag_mask] += amb.ident
        return vals

    def retract(self, point, xi):
        return point + xi

    def inner(self, point, xi, zeta) -> float:
        return float(np.dot(xi, zeta))

    def zero_tangent(self, point):
        return np.zeros(self.dim)

    def axpy(self, a, xi, b, zeta):
        return a * xi + b * zeta

    def random_tangent(self, rng, point):
        v = rng.standard_normal(self.dim)
        return v / max(np.linalg.norm(v), 1e-300)

    def delta_ambient(self, point, ref) -> Ambient:
        return Ambient(self.n).add_coo(self.rows, self.cols, point - ref)

    def delta_norm_sq(self, point, ref) -> float:
        return float(np.dot(point - ref, point - ref))

    def point_norm(self, point) -> float:
        return float(np.linalg.norm(point))

    def weingarten(self, point, xi, egrad: Ambient):
        return None  # flat


def _coo_project(prows, pcols, rows, cols, vals):
    lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(prows, pcols))}
    out = np.zeros(len(prows))
    for a, b, v in zip(rows, cols, vals):
        i = lookup.get((int(a), int(b)))
        if i is not None:
            out[i] += v
    return out


class ScaledIdentityManifold:
    """Real multiples of the identity; a point is the scalar multiplier."""

    kind = "scaled-identity"

    def __init__(self, n: int):
        self.n = n
        self.dim = 1

    def from_matrix(self, F, tol: float = 1e-12):
        if isinstance(F, LowRankMatrix):
            F = F.toarray()
        if sp.issparse(F):
            C = F.tocsr().tocoo()  # canonical: duplicates summed
            c = float(F.diagonal().sum()) / self.n
            diag = C.row == C.col
            off_sq = float(np.sum(np.abs(C.data[~diag]) ** 2))
            off_sq += float(np.sum(np.abs(C.data[diag] - c) ** 2))
            off_sq += (self.n - int(np.count_nonzero(diag))) * c * c
            off = np.sqrt(max(off_sq, 0.0))
        else:
            Fd = np.asarray(F, dtype=float)
            c = float(np.trace(Fd)) / self.n
            off = float(np.linalg.norm(Fd - c * np.eye(self.n)))
        if off > tol * max(abs(c) * np.sqrt(self.n), 1.0):
            raise ValueError(f"matrix is not a multiple of the identity (residual {off:.3e})")
        return c

    def to_dense(self, point: float) -> np.ndarray:
        return point * np.eye(self.n)

    def apply(self, point, X):
        return point * X

    def tangent_apply(self, point, xi, X):
        return xi * X

    def tangent_ambient(self, point, xi) -> Ambient:
        return Ambient(self.n).add_identity(xi)

    def project(self, point, amb: Ambient) -> float:
        return amb.trace() / self.n

    def retract(self, point, xi):
        return point + xi

    def inner(self, point, xi, zeta) -> float:
        return float(self.n * xi * zeta)

    def zero_tangent(self, point):
        return 0.0

    def axpy(self, a, xi, b, zeta):
        return a * xi + b * zeta

    def random_tangent(self, rng, point):
        return 1.0 / np.sqrt(self.n)  # unit Frobenius norm

    def delta_ambient(self, point, ref) -> Ambient:
        return Ambient(self.n).add_identity(point - ref)

    def delta_norm_sq(self, point, ref) -> float:
        return float(self.n * (point - ref) ** 2)

    def point_norm(self, point) -> float:
        return float(abs(point) * np.sqrt(self.n))

    def weingarten(self, point, xi, egrad):
        return None


@dataclass
class FixedRankPoint:
    U: np.ndarray  # n x r orthonormal
    S: np.ndarray  # r x r, full rank
    V: np.ndarray  # n x r orthonormal


@dataclass
class FixedRankTangent:
    K: np.ndarray   # r x r
    Up: np.ndarray  # n x r with U^T Up = 0
    Vp: np.ndarray  # n x r with V^T Vp = 0


class FixedRankManifold:
    """Rank-r matrices in the embedded geometry.

    Tangent vectors at U S V^T are U K V^T + Up V^T + U Vp^T with the usual
    orthogonality constraints.  The retraction is the rank-r truncated SVD of
    point + tangent computed through a 2r x 2r core, and the curvature
    (Weingarten) term uses the ambient gradient applied to thin factors only.
    """

    kind = "fixed-rank"

    def __init__(self, n: int, r: int):
        if r < 1 or r > n:
            raise ValueError("rank must satisfy 1 <= r <= n")
        self.n = n
        self.r = r
        self.dim = r * (2 * n - r)

    def from_matrix(self, F, tol: float = 1e-9) -> FixedRankPoint:
        r = self.r
        if isinstance(F, LowRankMatrix):
            Qa, Ra = np.linalg.qr(F.A)
            Qb, Rb = np.linalg.qr(F.B)
            core = Ra @ Rb.T
            Uc, s, Vct = np.linalg.svd(core)
            if s.size > r and s[r] > tol * s[0]:
                raise ValueError(f"matrix rank exceeds {r} (sigma_{r+1}={s[r]:.3e})")
            if s.size < r or s[r - 1] <= 0:
                raise ValueError("matrix rank is below the manifold rank")
            U = Qa @ Uc[:, :r]
            V = Qb @ Vct[:r].T
            return FixedRankPoint(U, np.diag(s[:r]), V)
        Fd = F.toarray() if sp.issparse(F) else np.asarray(F, dtype=float)
        U, s, Vt = np.linalg.svd(Fd, full_matrices=False)
        if s.size > r and s[r] > tol * s[0]:
            raise ValueError(f"matrix rank exceeds {r} (sigma_{r+1}={s[r]:.3e})")
        if s[r - 1] <= 0:
            raise ValueError("matrix rank is below the manifold rank")
        return FixedRankPoint(U[:, :r], np.diag(s[:r]), Vt[:r].T)

    def to_dense(self, point: FixedRankPoint) -> np.ndarray:
        return point.U @ point.S @ point.V.T

    def apply(self, point: FixedRankPoint, X):
        return point.U @ (point.S @ (point.V.T @ X))

    def tangent_apply(self, point, xi: FixedRankTangent, X):
        VtX = point.V.T @ X
        return point.U @ (xi.K @ VtX) + xi.Up @ VtX + point.U @ (xi.Vp.T @ X)

    def tangent_ambient(self, point, xi) -> Ambient:
        amb = Ambient(self.n)
        amb.add_pair(point.U @ xi.K + xi.Up, point.V)
        amb.add_pair(point.U, xi.Vp)
        return amb

    def project(self, point: FixedRankPoint, amb: Ambient) -> FixedRankTangent:
        ZV = amb.apply(point.V)
        ZtU = amb.apply_t(point.U)
        Kmat = point.U.T @ ZV
        Up = ZV - point.U @ Kmat
        Vp = ZtU - point.V @ Kmat.T
        return FixedRankTangent(Kmat, Up, Vp)

    def retract(self, point: FixedRankPoint, xi: FixedRankTangent) -> FixedRankPoint:
        r = self.r
        Qu, Ru = np.linalg.qr(xi.Up)
        Qv, Rv = np.linalg.qr(xi.Vp)
        core = np.zeros((2 * r, 2 * r))
        core[:r, :r] = point.S + xi.K
        core[:r, r:] = Rv.T
        core[r:, :r] = Ru
        Uc, s, Vct = np.linalg.svd(core)
        floor = 1e-12 * max(s[0], np.linalg.norm(point.S))
        if s[r - 1] <= floor:
            # nudge the spectrum once; a target that stays rank-deficient at
            # the point's scale has genuinely left the manifold
            bumped = core + 1e-14 * max(np.linalg.norm(point.S), 1.0) * np.eye(2 * r)
            Uc, s, Vct = np.linalg.svd(bumped)
            if s[r - 1] <= floor:
                raise RetractionError(
                    f"retraction collapsed below rank {r} "
                    f"(sigma_{r} = {s[r - 1]:.3e}, scale {floor:.3e})"
                )
        U = np.hstack([point.U, Qu]) @ Uc[:, :r]
        V = np.hstack([point.V, Qv]) @ Vct[:r].T
        return FixedRankPoint(U, np.diag(s[:r]), V)

    def inner(self, point, xi, zeta) -> float:
        return float(np.sum(xi.K * zeta.K) + np.sum(xi.Up * zeta.Up) + np.sum(xi.Vp * zeta.Vp))

    def zero_tangent(self, point):
        r = self.r
        return FixedRankTangent(np.zeros((r, r)), np.zeros((self.n, r)), np.zeros((self.n, r)))

    def axpy(self, a, xi, b, zeta):
        return FixedRankTangent(
            a * xi.K + b * zeta.K, a * xi.Up + b * zeta.Up, a * xi.Vp + b * zeta.Vp
        )

    def random_tangent(self, rng, point):
        amb = Ambient(self.n).add_pair(
            rng.standard_normal((self.n, self.r)), rng.standard_normal((self.n, self.r))
        )
        t = self.project(point, amb)
        nrm = np.sqrt(self.inner(point, t, t))
        return self.axpy(1.0 / max(nrm, 1e-300), t, 0.0, t)

    def delta_ambient(self, point, ref: FixedRankPoint) -> Ambient:
        amb = Ambient(self.n)
        amb.add_pair(np.hstack([point.U @ point.S, -(ref.U @ ref.S)]), np.hstack([point.V, ref.V]))
        return amb

    def delta_norm_sq(self, point, ref) -> float:
        A = np.hstack([point.U @ point.S, -(ref.U @ ref.S)])
        B = np.hstack([point.V, ref.V])
        return float(max(np.trace((A.T @ A) @ (B.T @ B)), 0.0))

    def point_norm(self, point) -> float:
        return float(np.linalg.norm(point.S))

    def weingarten(self, point, xi, egrad: Ambient) -> FixedRankTangent:
        """Curvature correction P_{U_perp}(G Vp) S^{-1}, P_{V_perp}(G^T Up) S^{-1}."""
        Sinv = np.linalg.inv(point.S)
        T1 = egrad.apply(xi.Vp) @ Sinv
        Up = T1 - point.U @ (point.U.T @ T1)
        T2 = egrad.apply_t(xi.Up) @ Sinv
        Vp = T2 - point.V @ (point.V.T @ T2)
        return FixedRankTangent(np.zeros((self.r, self.r)), Up, Vp)


def manifold_for_spec(spec, n: int):
    """Map a StructureSpec to its manifold; raises for unsupported kinds."""
    from .structures import StructureSpec

    if not isinstance(spec, StructureSpec):
        raise TypeError("expected a StructureSpec")
    if spec.kind == "sparsity":
        return SparsePatternManifold(n, spec.pattern)
    if spec.kind == "scaled-identity":
        return ScaledIdentityManifold(n)
    if spec.kind == "fixed-rank":
        return FixedRankManifold(n, spec.rank)
    if spec.kind == "unstructured":
        full = [(a, b) for a in range(n) for b in range(n)]
        return SparsePatternManifold(n, full)
    raise ValueError(
        f"structure kind {spec.kind!r} has no manifold implementation; "
        "use the linear-structure solver instead"
    )


class ProductGeometry:
    """Product of per-coefficient manifolds; points and tangents are lists."""

    def __init__(self, manifolds):
        self.manifolds = list(manifolds)
        self.dim = sum(m.dim for m in self.manifolds)

    def inner(self, x, xi, zeta) -> float:
        return sum(m.inner(p, a, b) for m, p, a, b in zip(self.manifolds, x, xi, zeta))

    def norm(self, x, xi) -> float:
        return float(np.sqrt(max(self.inner(x, xi, xi), 0.0)))

    def zero_tangent(self, x):
        return [m.zero_tangent(p) for m, p in zip(self.manifolds, x)]

    def axpy(self, a, xi, b, zeta):
        return [m.axpy(a, u, b, w) for m, u, w in zip(self.manifolds, xi, zeta)]

    def retract(self, x, xi):
        return [m.retract(p, u) for m, p, u in zip(self.manifolds, x, xi)]

    def random_tangent(self, rng, x):
        t = [m.random_tangent(rng, p) for m, p in zip(self.manifolds, x)]
        nrm = self.norm(x, t)
        return self.axpy(1.0 / max(nrm, 1e-300), t, 0.0, t)
