"""Benchmark suites: perturbation sweeps and scaling runs with .dat/CSV output.

Every suite is deterministic for a fixed seed.  Emitted upper bounds are
checked against the computed errors on every record; a violation aborts the
suite with diagnostics, because it would falsify the underlying inequalities.

Output layout: <out_dir>/<suite>/<name>.dat (whitespace-delimited columns,
one '#' header line) and <out_dir>/<suite>/<name>.csv (RFC-4180 with header).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import EigenpairSet
from .gallery import (
    GalleryProblem,
    build_beam,
    build_quadratic_lowrank,
    build_random_sparse_split,
    build_random_split,
    default_newton_options,
    perturb_ensemble,
)
from .newton import collect_pairs
from .penalty import penalty_continuation
from .structured import structured_backward_error
from .symmetric import symmetric_backward_error, symmetric_bound
from .unstructured import bounds_with_eigenvectors
from .structures import StructureSpec

BOUND_SLACK = 1e-10


@dataclass
class BenchRecord:
    suite: str
    index: int
    res_norm: float
    values: dict
    elapsed: float
    problem: dict = field(default_factory=dict)


@dataclass
class BenchResult:
    suite: str
    records: list[BenchRecord]
    files: list[str]


class BoundViolation(RuntimeError):
    pass


def _check_bound(record: BenchRecord, err_key: str, bound_key: str):
    err = record.values[err_key]
    bound = record.values[bound_key]
    if np.isinf(bound) or np.isnan(err):
        return
    if err > bound * (1.0 + BOUND_SLACK) + BOUND_SLACK * record.res_norm:
        raise BoundViolation(
            f"suite {record.suite}, member {record.index}: {err_key}={err:.6e} exceeds "
            f"{bound_key}={bound:.6e} (resnorm {record.res_norm:.3e})"
        )


def write_dat(path: Path, columns: list[str], rows: list[list[float]]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(f"{v:.16e}" for v in row) + "\n")
    return str(path)


def write_csv(path: Path, columns: list[str], rows: list[list]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)
    return str(path)


def _pairs_for(problem: GalleryProblem, p: int, seed: int, starts: int | None = None) -> EigenpairSet:
    opts = default_newton_options(problem)
    pairs, _ = collect_pairs(problem.nep, p=p, starts=starts or max(6 * p, 20), seed=seed, opts=opts)
    if pairs.p < p:
        raise RuntimeError(f"could not assemble {p} eigenpairs for suite problem {problem.name}")
    return pairs


def _unstructured_sweep(suite, problem, pairs, count, seed, out_path, with_sigma_g):
    """Shared driver for the unstructured bound-comparison figures."""
    records = []
    rows = []
    for i, (pert, _, _) in enumerate(
        perturb_ensemble(problem, count, (1e-12, 1e-1), seed=seed, structured=False)
    ):
        t0 = time.perf_counter()
        rep = bounds_with_eigenvectors(pert, pairs)
        elapsed = time.perf_counter() - t0
        values = {
            "eta": rep.eta_exact,
            "bound_sigma_g_kappa": rep.upper_G_kappa,
            "bound_krt": rep.upper_krt,
        }
        if with_sigma_g:
            values["bound_sigma_g"] = rep.upper_G
        rec = BenchRecord(suite, i, rep.res_norm, values, elapsed, {"n": problem.nep.n})
        _check_bound(rec, "eta", "bound_krt")
        _check_bound(rec, "eta", "bound_sigma_g_kappa")
        if with_sigma_g:
            _check_bound(rec, "eta", "bound_sigma_g")
        records.append(rec)
        row = [rep.res_norm, rep.eta_exact]
        if with_sigma_g:
            row.append(rep.upper_G)
        row += [rep.upper_G_kappa, rep.upper_krt]
        rows.append(row)
    cols = ["resnorm", "eta"]
    if with_sigma_g:
        cols.append("bound_sigma_g")
    cols += ["bound_sigma_g_kappa", "bound_krt"]
    return records, [write_dat(out_path, cols, rows)]


def suite_unstructured_random(out_dir, count, seed, **_):
    problem = build_random_split(128, seed=seed)
    records, files = [], []
    for p, with_g in ((3, True), (10, False)):
        pairs = _pairs_for(problem, p, seed + p)
        recs, fs = _unstructured_sweep(
            f"unstructured-random-p{p}", problem, pairs, count, seed + 100 + p,
            Path(out_dir) / "unstructured-random" / f"unstructured_p{p}.dat", with_g,
        )
        records += recs
        files += fs
    return records, files


def suite_beam(out_dir, count, seed, p, **_):
    problem = build_beam(1000)
    pairs = _pairs_for(problem, p, seed)
    name = f"beam-p{p}"
    return _unstructured_sweep(
        name, problem, pairs, count, seed + 7,
        Path(out_dir) / name / f"beam_p{p}.dat", with_sigma_g=p <= problem.nep.k,
    )


def suite_sparse_structured(out_dir, count, seed, **_):
    problem = build_random_sparse_split(64, seed=seed)
    pairs = _pairs_for(problem, 3, seed + 1)
    records, rows = [], []
    for i, (pert, _, _) in enumerate(
        perturb_ensemble(problem, count, (1e-12, 1e-1), seed=seed + 5, structured=True)
    ):
        t0 = time.perf_counter()
        res = structured_backward_error(pert, pairs, problem.specs)
        rep = bounds_with_eigenvectors(pert, pairs)
        elapsed = time.perf_counter() - t0
        values = {
            "eta_s": res.eta,
            "bound_krt_unstructured": rep.upper_krt,  # reported for reference only
            "bound_structured": res.upper_bound,
        }
        rec = BenchRecord("sparse-structured", i, res.res_norm, values, elapsed, {"n": 64})
        _check_bound(rec, "eta_s", "bound_structured")
        records.append(rec)
        rows.append([res.res_norm, res.eta, rep.upper_krt, res.upper_bound])
    f = write_dat(
        Path(out_dir) / "sparse-structured" / "sparse_structured.dat",
        ["resnorm", "eta_s", "bound_krt_unstructured", "bound_structured"],
        rows,
    )
    return records, [f]


def suite_symmetric(out_dir, count, seed, n, with_structured_bound=None, **_):
    if with_structured_bound is None:
        with_structured_bound = n <= 64
    problem = build_random_split(n, seed=seed, symmetric=True)
    pairs = _pairs_for(problem, 3, seed + 2)
    suite = f"symmetric-{n}"
    records, rows = [], []
    for i, (pert, _, _) in enumerate(
        perturb_ensemble(problem, count, (1e-12, 1e-1), seed=seed + 9, structured=True)
    ):
        t0 = time.perf_counter()
        res = symmetric_backward_error(pert, pairs)
        bnd = symmetric_bound(pert, pairs, workspace=res.workspace)
        rep = bounds_with_eigenvectors(pert, pairs)
        values = {
            "eta_sym": res.eta,
            "bound_krt_unstructured": rep.upper_krt,
            "bound_cheap": bnd.headline,
        }
        row = [res.workspace.res_norm, res.eta, rep.upper_krt]
        if with_structured_bound:
            lin = structured_backward_error(pert, pairs, [StructureSpec.symmetric()] * pert.k)
            values["bound_structured"] = lin.upper_bound
            row.append(lin.upper_bound)
        row.append(bnd.headline)
        elapsed = time.perf_counter() - t0
        rec = BenchRecord(suite, i, res.workspace.res_norm, values, elapsed, {"n": n})
        _check_bound(rec, "eta_sym", "bound_cheap")
        if with_structured_bound:
            _check_bound(rec, "eta_sym", "bound_structured")
        records.append(rec)
        rows.append(row)
    cols = ["resnorm", "eta_sym", "bound_krt_unstructured"]
    if with_structured_bound:
        cols.append("bound_structured")
    cols.append("bound_cheap")
    f = write_dat(Path(out_dir) / suite / f"symmetric_n{n}.dat", cols, rows)
    # bound quality table: cheap-bound-to-exact ratio per member
    ratio_rows = [
        [rec.index, rec.res_norm, rec.values["eta_sym"], rec.values["bound_cheap"],
         rec.values["bound_cheap"] / rec.values["eta_sym"]
         if rec.values["eta_sym"] > 0 else np.inf]
        for rec in records
    ]
    f2 = write_csv(
        Path(out_dir) / suite / f"symmetric_n{n}_ratios.csv",
        ["member", "resnorm", "eta_sym", "bound_cheap", "ratio"],
        ratio_rows,
    )
    return records, [f, f2]


def _riemannian_run(problem: GalleryProblem, p: int, seed: int, magnitude: float, rho, eps):
    """Perturb a problem within structure, then recover the backward error."""
    pairs = _pairs_for(problem, p, seed)
    pert, mags, total = next(
        perturb_ensemble(problem, 1, (magnitude, magnitude), seed=seed + 13,
                         structured=True, relative=False)
    )
    t0 = time.perf_counter()
    result = penalty_continuation(pert, pairs, problem.specs, rho=rho, eps=eps)
    elapsed = time.perf_counter() - t0
    return {
        "n": problem.nep.n,
        "time_seconds": elapsed,
        "eta_s": result.eta,
        "residual_norm": result.residual_norm,
        "perturbation_norm": total,
        "converged": result.converged,
    }


def suite_riemannian_beam_scaling(out_dir, count, seed, sizes=None, slow=False, rho=0.1, eps=1e-8, **_):
    if sizes is None:
        sizes = [1000, 2000, 5000, 10000, 20000, 50000, 100000] if slow else [1000, 2000]
    records, rows = [], []
    for i, n in enumerate(sizes):
        problem = build_beam(int(n))
        out = _riemannian_run(problem, p=3, seed=seed + i, magnitude=5e-3 / np.sqrt(3), rho=rho, eps=eps)
        rec = BenchRecord("riemannian-beam-scaling", i, out["residual_norm"],
                          dict(out), out["time_seconds"], {"n": n})
        records.append(rec)
        rows.append([out["n"], out["time_seconds"], out["eta_s"],
                     out["residual_norm"], out["perturbation_norm"]])
    f = write_csv(
        Path(out_dir) / "riemannian-beam-scaling" / "scaling.csv",
        ["n", "time_seconds", "eta_s", "residual_norm", "perturbation_norm"],
        rows,
    )
    return records, [f]


def suite_riemannian_quadratic(out_dir, count, seed, n=None, slow=False, rho=0.1, eps=1e-8, **_):
    n = n or (10000 if slow else 2000)
    problem = build_quadratic_lowrank(int(n), seed=seed)
    out = _riemannian_run(problem, p=2, seed=seed + 3, magnitude=1.15, rho=rho, eps=eps)
    rec = BenchRecord("riemannian-quadratic", 0, out["residual_norm"], dict(out),
                      out["time_seconds"], {"n": n})
    f = write_csv(
        Path(out_dir) / "riemannian-quadratic" / "quadratic.csv",
        ["n", "time_seconds", "eta_s", "residual_norm", "perturbation_norm"],
        [[out["n"], out["time_seconds"], out["eta_s"], out["residual_norm"],
          out["perturbation_norm"]]],
    )
    return [rec], [f]


SUITES = {
    "unstructured-random": suite_unstructured_random,
    "beam-p3": lambda out, count, seed, **kw: suite_beam(out, count, seed, p=3, **kw),
    "beam-p10": lambda out, count, seed, **kw: suite_beam(out, count, seed, p=10, **kw),
    "sparse-structured": suite_sparse_structured,
    "symmetric-64": lambda out, count, seed, **kw: suite_symmetric(out, count, seed, n=64, **kw),
    "symmetric-128": lambda out, count, seed, **kw: suite_symmetric(out, count, seed, n=128, **kw),
    "symmetric-2048": lambda out, count, seed, **kw: suite_symmetric(out, count, seed, n=2048, **kw),
    "riemannian-beam-scaling": suite_riemannian_beam_scaling,
    "riemannian-quadratic": suite_riemannian_quadratic,
}

SLOW_SUITES = {"symmetric-2048"}


def run_benchmark(suite: str, out_dir, count: int = 1000, seed: int = 0, **kwargs) -> BenchResult:
    """Run one named suite, writing its data files under out_dir/<suite>/."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    records, files = SUITES[suite](out_dir, count, seed, **kwargs)
    return BenchResult(suite, records, files)
