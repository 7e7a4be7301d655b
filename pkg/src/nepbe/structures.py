"""Structure specifications and orthonormal bases for linear structure classes.

A linear structure is described by an orthonormal (in the Frobenius inner
product) basis of n x n matrices.  Canonical bases for the named structures
are built directly in coordinate form; every element is 1- or 2-sparse, which
downstream assembly exploits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

LINEAR_KINDS = ("unstructured", "subspace", "symmetric", "sparsity", "scaled-identity")
ALL_KINDS = LINEAR_KINDS + ("fixed-rank",)


class BasisElement(NamedTuple):
    """A basis matrix stored as coordinates: sum_t vals[t] * e_rows[t] e_cols[t]^T."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros((n, n), dtype=self.vals.dtype)
        np.add.at(out, (self.rows, self.cols), self.vals)
        return out

    def apply(self, X: np.ndarray) -> np.ndarray:
        """(element) @ X, costing O(nnz * X.shape[1])."""
        out = np.zeros((X.shape[0], X.shape[1]), dtype=np.result_type(self.vals, X))
        for r, c, v in zip(self.rows, self.cols, self.vals):
            out[r] += v * X[c]
        return out


@dataclass(frozen=True)
class StructureSpec:
    """Per-coefficient structure tag.

    kind is one of: unstructured | subspace | symmetric | sparsity |
    scaled-identity | fixed-rank.
    """

    kind: str
    pattern: tuple | None = None       # sparsity: ((a, b), ...)
    basis: "SubspaceBasis | None" = None  # explicit subspace
    rank: int | None = None            # fixed-rank

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.kind == "sparsity" and self.pattern is None:
            raise ValueError("sparsity structure needs a coordinate pattern")
        if self.kind == "fixed-rank" and (self.rank is None or self.rank < 1):
            raise ValueError("fixed-rank structure needs a positive rank")
        if self.kind == "subspace" and self.basis is None:
            raise ValueError("subspace structure needs a basis")

    @property
    def is_linear(self) -> bool:
        return self.kind != "fixed-rank"

    # -- convenience constructors ------------------------------------------
    @staticmethod
    def unstructured() -> "StructureSpec":
        return StructureSpec("unstructured")

    @staticmethod
    def sparsity(pattern) -> "StructureSpec":
        pat = tuple(sorted({(int(a), int(b)) for a, b in pattern}))
        return StructureSpec("sparsity", pattern=pat)

    @staticmethod
    def sparsity_of(F, tol: float = 0.0) -> "StructureSpec":
        """Pattern of the nonzero entries of a dense or sparse matrix."""
        if hasattr(F, "tocoo") and not isinstance(F, np.ndarray):
            C = F.tocoo()
            mask = np.abs(C.data) > tol
            pairs = zip(C.row[mask], C.col[mask])
        else:
            F = np.asarray(F)
            idx = np.argwhere(np.abs(F) > tol)
            pairs = ((int(a), int(b)) for a, b in idx)
        return StructureSpec.sparsity(pairs)

    @staticmethod
    def symmetric() -> "StructureSpec":
        return StructureSpec("symmetric")

    @staticmethod
    def scaled_identity() -> "StructureSpec":
        return StructureSpec("scaled-identity")

    @staticmethod
    def fixed_rank(r: int) -> "StructureSpec":
        return StructureSpec("fixed-rank", rank=int(r))

    @staticmethod
    def subspace(basis: "SubspaceBasis") -> "StructureSpec":
        return StructureSpec("subspace", basis=basis)


class SubspaceBasis:
    """Frobenius-orthonormal basis of a linear subspace of n x n matrices."""

    def __init__(self, n: int, elements: Sequence[BasisElement], orthonormal: bool = False):
        self.n = int(n)
        self.elements = list(elements)
        if not orthonormal:
            self.elements = _gram_schmidt(self.n, self.elements)
        self.orthonormal = True

    @property
    def dim(self) -> int:
        return len(self.elements)

    def to_dense_stack(self) -> np.ndarray:
        """Basis as columns of an (n^2, d) matrix of vectorized elements."""
        out = np.zeros((self.n * self.n, self.dim), dtype=self._dtype())
        for i, el in enumerate(self.elements):
            np.add.at(out[:, i], el.rows + el.cols * self.n, el.vals)
        return out

    def _dtype(self):
        return np.result_type(*(el.vals.dtype for el in self.elements)) if self.elements else float

    def gram(self) -> np.ndarray:
        P = self.to_dense_stack()
        return P.conj().T @ P

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        """sum_i coeffs[i] * element_i as a dense matrix."""
        out = np.zeros((self.n, self.n), dtype=np.result_type(self._dtype(), coeffs.dtype))
        for c, el in zip(coeffs, self.elements):
            np.add.at(out, (el.rows, el.cols), c * el.vals)
        return out

    def project_coeffs(self, F: np.ndarray) -> np.ndarray:
        """Coordinates of the orthogonal projection of F onto the subspace."""
        F = np.asarray(F)
        return np.array([np.sum(el.vals.conj() * F[el.rows, el.cols]) for el in self.elements])

    @staticmethod
    def from_dense_matrices(mats: Sequence[np.ndarray], orthonormal: bool = False) -> "SubspaceBasis":
        mats = [np.asarray(m) for m in mats]
        n = mats[0].shape[0]
        elems = []
        for m in mats:
            if m.shape != (n, n):
                raise ValueError("all basis matrices must share the same square shape")
            rows, cols = np.nonzero(m)
            elems.append(BasisElement(rows, cols, m[rows, cols]))
        return SubspaceBasis(n, elems, orthonormal=orthonormal)


def _gram_schmidt(n: int, elements: Sequence[BasisElement]) -> list[BasisElement]:
    """Modified Gram-Schmidt in the Frobenius inner product (densifies)."""
    kept: list[np.ndarray] = []
    for el in elements:
        v = el.to_dense(n).astype(complex)
        for u in kept:
            v = v - np.vdot(u, v) * u
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            kept.append(v / nrm)
    out = []
    for v in kept:
        if np.abs(v.imag).max(initial=0.0) == 0.0:
            v = v.real
        rows, cols = np.nonzero(v)
        out.append(BasisElement(rows, cols, v[rows, cols]))
    return out


def canonical_basis(spec: StructureSpec, n: int) -> SubspaceBasis:
    """Orthonormal basis realizing a linear structure kind.

    sparsity gives {e_a e_b^T}, scaled-identity gives {I/sqrt(n)}, symmetric
    gives the diagonal units plus (e_a e_b^T + e_b e_a^T)/sqrt(2) for a < b,
    unstructured gives the full coordinate basis.  fixed-rank is rejected:
    it is not a linear subspace.
    """
    if spec.kind == "fixed-rank":
        raise ValueError("fixed-rank is not a linear structure; use the manifold machinery")
    if spec.kind == "subspace":
        basis = spec.basis
        if basis.n != n:
            raise ValueError(f"subspace basis is for n={basis.n}, problem has n={n}")
        return basis
    one = np.array([1.0])
    if spec.kind == "scaled-identity":
        idx = np.arange(n)
        return SubspaceBasis(
            n, [BasisElement(idx, idx, np.full(n, 1.0 / np.sqrt(n)))], orthonormal=True
        )
    if spec.kind == "sparsity":
        elems = []
        for a, b in spec.pattern:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"pattern index {(a, b)} outside an {n} x {n} matrix")
            elems.append(BasisElement(np.array([a]), np.array([b]), one))
        return SubspaceBasis(n, elems, orthonormal=True)
    if spec.kind == "symmetric":
        elems = []
        s = np.array([1.0 / np.sqrt(2.0)] * 2)
        for a in range(n):
            elems.append(BasisElement(np.array([a]), np.array([a]), one))
            for b in range(a + 1, n):
                elems.append(BasisElement(np.array([a, b]), np.array([b, a]), s.copy()))
        return SubspaceBasis(n, elems, orthonormal=True)
    if spec.kind == "unstructured":
        elems = []
        for b in range(n):
            for a in range(n):
                elems.append(BasisElement(np.array([a]), np.array([b]), one))
        return SubspaceBasis(n, elems, orthonormal=True)
    raise ValueError(f"unhandled structure kind {spec.kind!r}")
