#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

These kernels sit inside the trust-region inner loop of the Riemannian
solver: the pattern-restricted product (tangent projection onto a sparsity
manifold) and the COO matvec block (applying a sparse coefficient iterate).

Usage:
    python benchmarks/kernel_bench.py
    python benchmarks/kernel_bench.py --sizes 1000 10000 100000 --reps 50
    python benchmarks/kernel_bench.py --output results.json
"""

import argparse
import json
import time

import numpy as np

import nepbe._kernels as K


def time_call(fn, reps):
    fn()  # warm-up (also triggers JIT compilation)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_masked_dot(n, p, nnz, reps, rng):
    A = rng.standard_normal((n, p))
    B = rng.standard_normal((n, p))
    rows = rng.integers(0, n, size=nnz).astype(np.int64)
    cols = rng.integers(0, n, size=nnz).astype(np.int64)
    t_np = time_call(lambda: K.masked_rowcol_dot_numpy(A, B, rows, cols), reps)
    t_nb = None
    if K.NUMBA_ENABLED:
        t_nb = time_call(lambda: K.masked_rowcol_dot_numba(A, B, rows, cols), reps)
        ref = K.masked_rowcol_dot_numpy(A, B, rows, cols)
        assert np.allclose(K.masked_rowcol_dot_numba(A, B, rows, cols), ref, atol=1e-12)
    return t_np, t_nb


def bench_coo_matmat(n, p, nnz, reps, rng):
    rows = rng.integers(0, n, size=nnz).astype(np.int64)
    cols = rng.integers(0, n, size=nnz).astype(np.int64)
    vals = rng.standard_normal(nnz)
    X = rng.standard_normal((n, p))
    out = np.zeros((n, p))
    t_np = time_call(lambda: K.coo_matmat_numpy(rows, cols, vals, X, out * 0.0), reps)
    t_nb = None
    if K.NUMBA_ENABLED:
        t_nb = time_call(lambda: K.coo_matmat_numba(rows, cols, vals, X, out * 0.0), reps)
        ref = K.coo_matmat_numpy(rows, cols, vals, X, np.zeros((n, p)))
        got = K.coo_matmat_numba(rows, cols, vals, X, np.zeros((n, p)))
        assert np.allclose(got, ref, atol=1e-12)
    return t_np, t_nb


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="*", default=[1000, 10000, 100000])
    parser.add_argument("--p", type=int, default=3, help="block column count")
    parser.add_argument("--reps", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", help="write results to this JSON file")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"numba enabled: {K.NUMBA_ENABLED}")
    header = f"{'kernel':<18}{'n':>9}{'nnz':>9}{'numpy (us)':>13}{'numba (us)':>13}{'speedup':>9}"
    print(header)
    print("-" * len(header))

    results = []
    for n in args.sizes:
        nnz = 3 * n  # tridiagonal-scale patterns
        for name, fn in (("masked_rowcol_dot", bench_masked_dot),
                         ("coo_matmat", bench_coo_matmat)):
            t_np, t_nb = fn(n, args.p, nnz, args.reps, rng)
            speedup = (t_np / t_nb) if t_nb else float("nan")
            print(f"{name:<18}{n:>9}{nnz:>9}{t_np * 1e6:>13.1f}"
                  f"{(t_nb * 1e6 if t_nb else float('nan')):>13.1f}{speedup:>9.2f}")
            results.append({"kernel": name, "n": n, "nnz": nnz,
                            "numpy_seconds": t_np, "numba_seconds": t_nb,
                            "speedup": speedup})

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"numba_enabled": K.NUMBA_ENABLED, "results": results}, fh, indent=2)
        print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
