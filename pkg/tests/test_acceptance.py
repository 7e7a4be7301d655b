"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete.  Tolerances are fixed here and nowhere else.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from nepbe.core import EigenpairSet, residual_bundle
from nepbe.gallery import (
    build_beam,
    build_quadratic_lowrank,
    build_random_split,
    default_newton_options,
    perturb_ensemble,
)
from nepbe.linalg import khatri_rao_t, kron, vec
from nepbe.manifolds import ProductGeometry, manifold_for_spec
from nepbe.newton import collect_pairs
from nepbe.penalty import PenaltyProblem, penalty_continuation
from nepbe.structured import structured_backward_error
from nepbe.structures import StructureSpec
from nepbe.symmetric import symmetric_backward_error, symmetric_bound
from nepbe.unstructured import (
    backward_error_exact,
    bounds_eigenvalues_only,
    bounds_with_eigenvectors,
    smallest_singular_triplets,
)
from conftest import random_nep, random_pairs


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def test_oracle_equivalence_unstructured():
    with criterion("oracle-equivalence-unstructured"):
        rng = np.random.default_rng(100)
        t0 = time.perf_counter()
        for trial in range(50):
            n = int(rng.integers(4, 13))
            k = int(rng.integers(1, 5))
            p = int(rng.integers(1, 4))
            nep = random_nep(rng, n, k, complex_coeffs=True)
            pairs = random_pairs(rng, n, p)
            pset = backward_error_exact(nep, pairs)
            # independent oracle: dense stacked system, LAPACK min-norm lstsq
            bundle = residual_bundle(nep, pairs)
            A = kron(khatri_rao_t(bundle.G, pairs.V.T), np.eye(n))
            x, *_ = np.linalg.lstsq(A, -vec(bundle.R), rcond=None)
            eta_oracle = float(np.linalg.norm(x))
            assert abs(pset.eta - eta_oracle) <= 1e-10 * max(eta_oracle, 1e-300), (
                f"trial {trial}: eta {pset.eta} vs oracle {eta_oracle}"
            )
            scale = bundle.res_norm + pset.eta * np.linalg.norm(bundle.W)
            assert pset.perturbed_residual_norm(bundle) <= 1e-10 * scale
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


def test_p1_closed_form():
    with criterion("p1-closed-form"):
        rng = np.random.default_rng(200)
        for trial in range(100):
            nep = random_nep(rng, 20, 3, complex_coeffs=True)
            lam = rng.standard_normal() + 1j * rng.standard_normal()
            sigmas, _, V = smallest_singular_triplets(nep, [lam])
            eta = backward_error_exact(nep, EigenpairSet([lam], V)).eta
            expected = sigmas[0] / np.linalg.norm(nep.func_row(lam))
            assert abs(eta - expected) <= 1e-10 * max(expected, 1e-300), (
                f"trial {trial}: {eta} vs closed form {expected}"
            )


def test_bound_ordering_random_sweep():
    with criterion("bound-ordering-random-sweep"):
        problem = build_random_split(64, seed=7)
        pairs, _ = collect_pairs(problem.nep, p=3, starts=24, seed=11)
        assert pairs.p == 3
        violations = 0
        for i, (pert, _, _) in enumerate(
            perturb_ensemble(problem, 200, (1e-12, 1e-1), seed=13, structured=False)
        ):
            rep = bounds_with_eigenvectors(pert, pairs)
            slack = 1e-10 * max(1.0, rep.res_norm)
            if rep.eta_exact > rep.upper_krt + slack:
                violations += 1
            if rep.upper_krt > rep.upper_G_kappa + slack:
                violations += 1
            # p = 3 <= k = 5: the cheap bound applies as well
            if rep.upper_G is None or rep.eta_exact > rep.upper_G + slack:
                violations += 1
        assert violations == 0, f"{violations} ordering violations in 200 members"


def test_eigenvalue_only_sandwich():
    with criterion("eigenvalue-only-sandwich"):
        rng = np.random.default_rng(300)
        for trial in range(100):
            n = int(rng.integers(6, 16))
            k = int(rng.integers(2, 5))
            p = int(rng.integers(1, 4))
            nep = random_nep(rng, n, k, complex_coeffs=True)
            lams = rng.standard_normal(p) + 0.4j * rng.standard_normal(p)
            rep = bounds_eigenvalues_only(nep, lams)
            _, _, V = smallest_singular_triplets(nep, lams)
            eta = backward_error_exact(nep, EigenpairSet(lams, V)).eta
            slack = 1e-10 * max(1.0, eta)
            assert rep.lower_sv <= eta + slack, f"trial {trial}: lower bound broken"
            assert eta <= rep.upper_sv + slack, f"trial {trial}: upper bound broken"


def _random_pattern(rng, n, count):
    idx = rng.choice(n * n, size=count, replace=False)
    return [(int(i // n), int(i % n)) for i in idx]


def test_structured_linear_oracle():
    with criterion("structured-linear-oracle"):
        rng = np.random.default_rng(400)
        for trial in range(50):
            n = int(rng.integers(6, 17))
            k = int(rng.integers(2, 4))
            p = int(rng.integers(1, 3))
            nep = random_nep(rng, n, k, complex_coeffs=True)
            pairs = random_pairs(rng, n, p)
            specs = [
                StructureSpec.sparsity(_random_pattern(rng, n, int(rng.integers(10, 3 * n))))
                for _ in range(k)
            ]
            res = structured_backward_error(nep, pairs, specs)
            # dense brute force over the basis parametrization
            from nepbe.structures import canonical_basis

            bundle = residual_bundle(nep, pairs)
            A_full = kron(khatri_rao_t(bundle.G, pairs.V.T), np.eye(n))
            blocks = [canonical_basis(s, n).to_dense_stack() for s in specs]
            d = sum(b.shape[1] for b in blocks)
            P = np.zeros((k * n * n, d), dtype=complex)
            r0, c0 = 0, 0
            for b in blocks:
                P[r0 : r0 + n * n, c0 : c0 + b.shape[1]] = b
                r0 += n * n
                c0 += b.shape[1]
            delta, *_ = np.linalg.lstsq(A_full @ P, -vec(bundle.R), rcond=None)
            eta_oracle = float(np.linalg.norm(delta))
            assert abs(res.eta - eta_oracle) <= 1e-8 * max(eta_oracle, 1e-300), (
                f"trial {trial}: {res.eta} vs oracle {eta_oracle}"
            )
            eta_unstructured = backward_error_exact(nep, pairs).eta
            assert res.eta >= eta_unstructured - 1e-10 * max(1.0, eta_unstructured)


def test_symmetric_cross_validation():
    with criterion("symmetric-cross-validation"):
        rng = np.random.default_rng(500)
        for trial in range(50):
            n = int(rng.integers(6, 33))
            p = int(rng.integers(1, 4))
            nep = random_nep(rng, n, 3, symmetric=True)
            pairs = EigenpairSet(rng.standard_normal(p) * 0.5, rng.standard_normal((n, p)))
            res_sym = symmetric_backward_error(nep, pairs)
            res_lin = structured_backward_error(nep, pairs, [StructureSpec.symmetric()] * 3)
            assert abs(res_sym.eta - res_lin.eta) <= 1e-8 * max(res_lin.eta, 1e-300), (
                f"trial {trial}: symmetric {res_sym.eta} vs structured {res_lin.eta}"
            )
            for j in range(3):
                dF = res_sym.perturbation.term(j)
                assert np.linalg.norm(dF - dF.T) <= 1e-12 * max(np.linalg.norm(dF), 1e-300)
            bnd = symmetric_bound(nep, pairs, workspace=res_sym.workspace)
            assert bnd.sqrt_pinv_form >= res_sym.eta - 1e-10 * max(1.0, res_sym.eta), (
                f"trial {trial}: cheap symmetric bound violated"
            )


def test_riemannian_flat_vs_exact():
    with criterion("riemannian-flat-vs-exact"):
        t0 = time.perf_counter()
        sizes = [16, 20, 24, 28, 32, 36, 40, 48, 56, 64]
        trial = 0
        for n in sizes:
            prob = build_beam(n)
            pairs, _ = collect_pairs(prob.nep, p=2, starts=12, seed=n,
                                     opts=default_newton_options(prob))
            for pert_seed in (1, 2):
                pert, _, _ = next(
                    perturb_ensemble(prob, 1, (1e-3, 1e-3), seed=pert_seed)
                )
                exact = structured_backward_error(pert, pairs, prob.specs)
                result = penalty_continuation(pert, pairs, prob.specs)
                assert abs(result.eta - exact.eta) <= 0.05 * exact.eta, (
                    f"instance n={n} seed={pert_seed}: {result.eta} vs exact {exact.eta}"
                )
                scale = pert.coefficient_norm()
                assert result.residual_norm <= 1e-8 * scale, (
                    f"instance n={n} seed={pert_seed}: residual {result.residual_norm}"
                )
                trial += 1
        assert trial == 20
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0, f"flat riemannian sweep took {elapsed:.1f}s"


def test_riemannian_fixed_rank_feasibility():
    with criterion("riemannian-fixed-rank-feasibility"):
        prob = build_quadratic_lowrank(500, seed=0)
        pairs, _ = collect_pairs(prob.nep, p=2, starts=16, seed=3,
                                 opts=default_newton_options(prob))
        assert pairs.p == 2
        pert, _, pert_norm = next(
            perturb_ensemble(prob, 1, (1.15, 1.15), seed=5, relative=False)
        )
        result = penalty_continuation(pert, pairs, prob.specs)
        # rank exactly 2 by representation
        point = result.points[1]
        assert np.linalg.matrix_rank(result.manifolds[1].to_dense(point)) == 2
        assert np.min(np.diag(point.S)) > 0
        scale = pert.coefficient_norm()
        assert result.residual_norm <= 1e-7 * scale
        # feasible-point domination: the generating perturbation is feasible
        assert result.eta <= pert_norm * (1 + 1e-6)
        assert 0.5 <= result.eta / pert_norm <= 1.0


def test_beam_scaling_reduced():
    with criterion("beam-scaling-reduced"):
        times = {}
        for i, n in enumerate((1000, 2000)):
            prob = build_beam(n)
            pairs, _ = collect_pairs(prob.nep, p=3, starts=20, seed=i,
                                     opts=default_newton_options(prob))
            pert, _, pert_norm = next(
                perturb_ensemble(prob, 1, (5e-3 / np.sqrt(3),) * 2, seed=13 + i,
                                 structured=True, relative=False)
            )
            t0 = time.perf_counter()
            result = penalty_continuation(pert, pairs, prob.specs)
            times[n] = time.perf_counter() - t0
            assert result.eta <= pert_norm * (1 + 1e-6), (
                f"n={n}: eta {result.eta} vs generating {pert_norm}"
            )
            scale = pert.coefficient_norm()
            assert result.residual_norm <= 1e-7 * scale
        # within 10x of a linear-in-n trend between the two sizes
        ratio = times[2000] / max(times[1000], 1e-9)
        assert ratio <= 10.0 * 2.0, f"2x size took {ratio:.1f}x the time"
        assert ratio >= 2.0 / 10.0, f"2x size took {ratio:.3f}x the time"


def test_gradient_hessian_checks():
    with criterion("gradient-hessian-checks"):
        rng = np.random.default_rng(600)
        galleries = [build_beam(20), build_quadratic_lowrank(24, seed=9)]
        for prob in galleries:
            n = prob.nep.n
            pairs = EigenpairSet(rng.standard_normal(2) * 0.5, rng.standard_normal((n, 2)))
            manifolds = [manifold_for_spec(s, n) for s in prob.specs]
            refs = [m.from_matrix(F) for m, F in zip(manifolds, prob.nep.coeffs)]
            from nepbe.core import function_matrix

            G = np.real(function_matrix(prob.nep, np.real(pairs.lambdas)))
            W = [np.real(pairs.V) * G[:, j] for j in range(prob.nep.k)]
            problem = PenaltyProblem(manifolds, refs, W, mu=0.3)
            geo = ProductGeometry(manifolds)
            x = [m.retract(r, m.random_tangent(rng, r)) for m, r in zip(manifolds, refs)]
            grad = problem.grad(x)
            f0 = problem.cost(x)
            for _ in range(20):
                v = geo.random_tangent(rng, x)
                t = 1e-6
                fp = problem.cost(geo.retract(x, geo.axpy(t, v, 0.0, v)))
                fm = problem.cost(geo.retract(x, geo.axpy(-t, v, 0.0, v)))
                fd = (fp - fm) / (2 * t)
                an = geo.inner(x, grad, v)
                assert abs(fd - an) <= 1e-5 * max(abs(an), 1e-6 * abs(f0)), (
                    f"{prob.name}: directional derivative {fd} vs gradient {an}"
                )
            # Euclidean Hessian against finite differences of the gradient
            xi = [m.random_tangent(rng, p) for m, p in zip(manifolds, x)]
            eblocks = problem.ehess_blocks(x, xi)
            Fd = [m.to_dense(p) for m, p in zip(manifolds, x)]
            Ed = [m.tangent_ambient(p, t).to_dense() for m, p, t in zip(manifolds, x, xi)]
            Rd = [m.to_dense(r) for m, r in zip(manifolds, refs)]
            h = 1e-5
            for j in range(len(manifolds)):
                def egrad_j(mats):
                    fw = sum(F @ Wj for F, Wj in zip(mats, W))
                    return 2.0 * fw @ W[j].T + 2.0 * problem.mu * (mats[j] - Rd[j])

                Fp = [F + h * E for F, E in zip(Fd, Ed)]
                Fm = [F - h * E for F, E in zip(Fd, Ed)]
                fd_mat = (egrad_j(Fp) - egrad_j(Fm)) / (2 * h)
                got = eblocks[j].to_dense()
                denom = max(np.linalg.norm(fd_mat), 1e-300)
                assert np.linalg.norm(got - fd_mat) <= 1e-4 * denom, (
                    f"{prob.name}: Hessian block {j} mismatch"
                )


def test_newton_beam_solver():
    with criterion("newton-beam-solver"):
        prob = build_beam(1000)
        pairs, _ = collect_pairs(prob.nep, p=3, starts=20, seed=7,
                                 opts=default_newton_options(prob))
        assert pairs.p >= 3, f"only {pairs.p} distinct eigenpairs found"
        for i, lam in enumerate(pairs.lambdas):
            res = np.linalg.norm(np.asarray(prob.nep.evaluate(lam) @ pairs.V[:, i]).ravel())
            assert res <= 1e-12 * prob.nep.evaluate_norm(lam), (
                f"pair {i}: residual {res}"
            )
