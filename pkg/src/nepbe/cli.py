"""Command-line interface.

Subcommands take a JSON problem config (see config_io) and print a small
human-readable table; --json switches to the stable machine-readable schema.
Exit codes: 0 success, 1 computational failure, 2 usage error.

The environment variable NEPBE_THREADS caps BLAS/OpenMP parallelism; it is
applied before any numerical module is imported.
"""

from __future__ import annotations

import argparse
import os
import sys
import time


def _apply_thread_cap():
    cap = os.environ.get("NEPBE_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nepbe",
        description="Backward errors of approximate eigenpairs for split-form "
                    "nonlinear eigenvalue problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="problem config (JSON)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    add_problem_cmd("exact", "unstructured backward error with minimal perturbations")
    add_problem_cmd("bounds", "exact value plus the explicit upper bounds")
    add_problem_cmd("eigvals-only", "bounds from eigenvalues alone")
    add_problem_cmd("structured", "backward error under linear structure constraints")
    add_problem_cmd("symmetric", "real-symmetric backward error and its cheap bound")

    p = add_problem_cmd("riemannian", "penalty-continuation structured backward error")
    p.add_argument("--rho", type=float, default=0.1, help="penalty decrease factor")
    p.add_argument("--eps", type=float, default=1e-8, help="stop when sqrt(mu) <= eps")
    p.add_argument("--max-iter", type=int, default=200, help="trust-region iteration cap")
    p.add_argument("--gtol", type=float, default=1e-8, help="relative gradient tolerance")
    p.add_argument("--no-weingarten", action="store_true",
                   help="drop the fixed-rank curvature term (Gauss-Newton mode)")
    p.add_argument("--verbose", action="store_true")

    p = add_problem_cmd("solve", "Newton eigenpair solve")
    p.add_argument("--save-lambdas", help="write eigenvalues to this JSON file")
    p.add_argument("--save-vectors", help="write eigenvectors to this Matrix Market file")

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("suite", help="suite name (see --list)" )
    p.add_argument("--out", default="./results", help="output directory")
    p.add_argument("--count", type=int, default=1000, help="ensemble size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slow", action="store_true", help="full-size (slow) runs")
    p.add_argument("--sizes", type=int, nargs="*", help="dimension list for scaling suites")
    p.add_argument("--n", type=int, help="dimension for single-problem suites")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("suites", help="list benchmark suite names")
    return parser


def _print_table(rows, stream=sys.stdout):
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        stream.write(f"{k:<{width}}  {v}\n")


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.12e}"
    return str(x)


def _load(args):
    from .config_io import load_problem

    loaded = load_problem(args.config)
    pairs = loaded.resolve_pairs()
    return loaded.nep, pairs


def _cmd_exact(args) -> int:
    from .config_io import dump_json, result_payload
    from .core import residual_bundle
    from .unstructured import backward_error_exact

    nep, pairs = _load(args)
    t0 = time.perf_counter()
    pset = backward_error_exact(nep, pairs)
    elapsed = time.perf_counter() - t0
    bundle = residual_bundle(nep, pairs)
    pert_res = pset.perturbed_residual_norm(bundle)
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=pset.eta, residual_norm=bundle.res_norm,
            timings={"exact_seconds": elapsed},
            extra={"perturbed_residual_norm": pert_res,
                   "perturbation_term_norms": pset.term_norms()},
        ), sys.stdout)
    else:
        _print_table([
            ("eta", _fmt(pset.eta)),
            ("residual norm", _fmt(bundle.res_norm)),
            ("perturbed residual", _fmt(pert_res)),
            ("seconds", _fmt(elapsed)),
        ])
    return 0


def _cmd_bounds(args) -> int:
    from .config_io import dump_json, result_payload
    from .unstructured import bounds_with_eigenvectors

    nep, pairs = _load(args)
    t0 = time.perf_counter()
    rep = bounds_with_eigenvectors(nep, pairs)
    elapsed = time.perf_counter() - t0
    bounds = {
        "upper_krt": rep.upper_krt,
        "upper_G_kappa": rep.upper_G_kappa,
        "upper_G": rep.upper_G,
    }
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=rep.eta_exact, residual_norm=rep.res_norm,
            bounds=bounds, timings={"bounds_seconds": elapsed},
        ), sys.stdout)
    else:
        _print_table([("eta (exact)", _fmt(rep.eta_exact))] +
                     [(k, _fmt(v)) for k, v in bounds.items()] +
                     [("residual norm", _fmt(rep.res_norm)), ("seconds", _fmt(elapsed))])
    return 0


def _cmd_eigvals_only(args) -> int:
    from .config_io import dump_json, load_problem, result_payload
    from .unstructured import bounds_eigenvalues_only

    loaded = load_problem(args.config)
    pairs = loaded.resolve_pairs()
    nep = loaded.nep
    t0 = time.perf_counter()
    rep = bounds_eigenvalues_only(nep, pairs.lambdas)
    elapsed = time.perf_counter() - t0
    bounds = {"lower_sv": rep.lower_sv, "upper_sv": rep.upper_sv, "upper_krt": rep.upper_krt}
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=None, residual_norm=rep.res_norm, bounds=bounds,
            timings={"eigvals_only_seconds": elapsed},
            extra={"sigma_hats": rep.sigma_hats},
        ), sys.stdout)
    else:
        _print_table([(k, _fmt(v)) for k, v in bounds.items()] +
                     [("sigma_hats", " ".join(f"{s:.6e}" for s in rep.sigma_hats)),
                      ("seconds", _fmt(elapsed))])
    return 0


def _cmd_structured(args) -> int:
    from .config_io import dump_json, result_payload
    from .structured import structured_backward_error

    nep, pairs = _load(args)
    if nep.specs is None:
        raise RuntimeError("the config declares no structures")
    t0 = time.perf_counter()
    res = structured_backward_error(nep, pairs, nep.specs)
    elapsed = time.perf_counter() - t0
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=res.eta, residual_norm=res.res_norm,
            bounds={"upper_structured": res.upper_bound},
            timings={"structured_seconds": elapsed},
            extra={"consistent": res.consistent,
                   "lsq_residual_norm": res.lsq_residual_norm},
        ), sys.stdout)
    else:
        _print_table([
            ("eta_S", _fmt(res.eta)),
            ("consistent", str(res.consistent)),
            ("lsq residual", _fmt(res.lsq_residual_norm)),
            ("structured upper bound", _fmt(res.upper_bound)),
            ("seconds", _fmt(elapsed)),
        ])
    return 0 if res.consistent else 1


def _cmd_symmetric(args) -> int:
    from .config_io import dump_json, result_payload
    from .symmetric import symmetric_backward_error, symmetric_bound

    nep, pairs = _load(args)
    t0 = time.perf_counter()
    res = symmetric_backward_error(nep, pairs)
    bnd = symmetric_bound(nep, pairs, workspace=res.workspace)
    elapsed = time.perf_counter() - t0
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=res.eta, residual_norm=res.workspace.res_norm,
            bounds={"cheap_bound": bnd.headline,
                    "cheap_bound_pinv_form": bnd.sqrt_pinv_form,
                    "cheap_bound_plain_form": bnd.sqrt_plain_form},
            timings={"symmetric_seconds": elapsed},
        ), sys.stdout)
    else:
        _print_table([
            ("eta_S (symmetric)", _fmt(res.eta)),
            ("cheap bound", _fmt(bnd.headline)),
            ("residual norm", _fmt(res.workspace.res_norm)),
            ("seconds", _fmt(elapsed)),
        ])
    return 0


def _cmd_riemannian(args) -> int:
    from .config_io import dump_json, result_payload
    from .penalty import penalty_continuation
    from .trustregion import TrustRegionOptions

    nep, pairs = _load(args)
    if nep.specs is None:
        raise RuntimeError("the config declares no structures")
    t0 = time.perf_counter()
    result = penalty_continuation(
        nep, pairs, nep.specs, eps=args.eps, rho=args.rho,
        tr_options=TrustRegionOptions(max_iter=args.max_iter, gtol_rel=args.gtol),
        use_weingarten=not args.no_weingarten,
        verbose=1 if args.verbose else 0,
    )
    elapsed = time.perf_counter() - t0
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=result.eta, residual_norm=result.residual_norm,
            timings={"riemannian_seconds": elapsed},
            extra={"converged": result.converged,
                   "stages": [{"mu": s.mu, "iterations": s.iterations,
                               "grad_norm": s.grad_norm,
                               "constraint_norm": s.constraint_norm}
                              for s in result.stages]},
        ), sys.stdout)
    else:
        _print_table([
            ("eta_S (riemannian)", _fmt(result.eta)),
            ("residual norm", _fmt(result.residual_norm)),
            ("converged", str(result.converged)),
            ("stages", str(len(result.stages))),
            ("seconds", _fmt(elapsed)),
        ])
    return 0 if result.converged else 1


def _cmd_solve(args) -> int:
    from .config_io import dump_json, result_payload, write_lambdas, write_matrix

    nep, pairs = _load(args)
    if args.save_lambdas:
        write_lambdas(args.save_lambdas, pairs.lambdas)
    if args.save_vectors:
        write_matrix(args.save_vectors, pairs.V)
    if args.json:
        dump_json(result_payload(
            nep, pairs.p, eta=None, residual_norm=None,
            extra={"lambdas": pairs.lambdas},
        ), sys.stdout)
    else:
        for i, lam in enumerate(pairs.lambdas):
            print(f"lambda[{i}] = {lam.real:+.12e} {lam.imag:+.12e}j")
    return 0


def _cmd_bench(args) -> int:
    from .bench import SUITES, run_benchmark

    kwargs = {}
    if args.sizes:
        kwargs["sizes"] = args.sizes
    if args.n:
        kwargs["n"] = args.n
    if args.slow:
        kwargs["slow"] = True
    result = run_benchmark(args.suite, args.out, count=args.count, seed=args.seed, **kwargs)
    if args.json:
        import json as _json

        _json.dump({"suite": result.suite, "files": result.files,
                    "records": len(result.records)}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        print(f"suite {result.suite}: {len(result.records)} records")
        for f in result.files:
            print(f"  wrote {f}")
    return 0


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "suites":
        from .bench import SLOW_SUITES, SUITES

        for name in sorted(SUITES):
            print(name + ("  (slow)" if name in SLOW_SUITES else ""))
        return 0

    handlers = {
        "exact": _cmd_exact,
        "bounds": _cmd_bounds,
        "eigvals-only": _cmd_eigvals_only,
        "structured": _cmd_structured,
        "symmetric": _cmd_symmetric,
        "riemannian": _cmd_riemannian,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # computational failure -> exit 1 with message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
