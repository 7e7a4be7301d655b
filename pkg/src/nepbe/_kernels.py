"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

The jitted path is selected once at import time.  Setting the environment
variable ``NEPBE_DISABLE_NUMBA`` to ``1``/``true``/``yes`` forces the numpy
implementations; the same happens automatically when numba is not importable.
Both variants stay importable under explicit names so they can be benchmarked
against each other (``benchmarks/kernel_bench.py``).

All kernels operate on float64 data: they back the real-arithmetic manifold
machinery, where they sit inside the trust-region inner loop.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_wanted() -> bool:
    flag = os.environ.get("NEPBE_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------

def masked_rowcol_dot_numpy(A, B, rows, cols):
    """Entries of A @ B.T on a coordinate pattern.

    out[t] = sum_c A[rows[t], c] * B[cols[t], c]
    """
    return np.einsum("tc,tc->t", A[rows], B[cols])


def coo_matmat_numpy(rows, cols, vals, X, out):
    """out += S @ X with S in coordinate form (fixed pattern, varying values)."""
    np.add.at(out, rows, vals[:, None] * X[cols])
    return out


def coo_rmatmat_numpy(rows, cols, vals, X, out):
    """out += S.T @ X with S in coordinate form."""
    np.add.at(out, cols, vals[:, None] * X[rows])
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

NUMBA_ENABLED = False

if _numba_wanted():
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
    if numba is not None:
        NUMBA_ENABLED = True

        @numba.njit(cache=True)
        def masked_rowcol_dot_numba(A, B, rows, cols):
            m = rows.shape[0]
            p = A.shape[1]
            out = np.empty(m, dtype=np.float64)
            for t in range(m):
                a = rows[t]
                b = cols[t]
                acc = 0.0
                for c in range(p):
                    acc += A[a, c] * B[b, c]
                out[t] = acc
            return out

        @numba.njit(cache=True)
        def coo_matmat_numba(rows, cols, vals, X, out):
            m = rows.shape[0]
            p = X.shape[1]
            for t in range(m):
                r = rows[t]
                c = cols[t]
                v = vals[t]
                for q in range(p):
                    out[r, q] += v * X[c, q]
            return out

        @numba.njit(cache=True)
        def coo_rmatmat_numba(rows, cols, vals, X, out):
            m = rows.shape[0]
            p = X.shape[1]
            for t in range(m):
                r = rows[t]
                c = cols[t]
                v = vals[t]
                for q in range(p):
                    out[c, q] += v * X[r, q]
            return out


if NUMBA_ENABLED:
    masked_rowcol_dot = masked_rowcol_dot_numba
    coo_matmat = coo_matmat_numba
    coo_rmatmat = coo_rmatmat_numba
else:
    masked_rowcol_dot = masked_rowcol_dot_numpy
    coo_matmat = coo_matmat_numpy
    coo_rmatmat = coo_rmatmat_numpy
