import numpy as np

from nepbe.core import LowRankMatrix, coeff_dense
from nepbe.gallery import (
    build_beam,
    build_quadratic_lowrank,
    build_random_sparse_split,
    build_random_split,
    perturb_ensemble,
)


class TestBeam:
    def test_n3_block_expansion(self):
        # hand-expanded [[A, -w^T], [-n w, n]] for n = 3
        A0 = coeff_dense(build_beam(3).nep.coeffs[1])
        expected = np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, -1.0], [0.0, -3.0, 3.0]])
        assert np.array_equal(A0, expected)

    def test_a1_single_corner_entry(self):
        n = 50
        A1 = coeff_dense(build_beam(n).nep.coeffs[2])
        assert np.count_nonzero(A1) == 1
        assert A1[n - 1, n - 1] == 1.0

    def test_evaluate_at_zero(self):
        prob = build_beam(12)
        F0 = coeff_dense(prob.nep.evaluate(0.0))
        A0 = coeff_dense(prob.nep.coeffs[1])
        A1 = coeff_dense(prob.nep.coeffs[2])
        assert np.allclose(F0, A0 + A1)

    def test_specs_match_coefficients(self):
        prob = build_beam(9)
        assert prob.specs[0].kind == "scaled-identity"
        assert prob.specs[1].kind == "sparsity"
        assert prob.specs[2].kind == "sparsity"
        assert prob.specs[2].pattern == ((8, 8),)


class TestRandomSplit:
    def test_function_row_at_zero(self):
        prob = build_random_split(8, seed=1)
        assert np.allclose(prob.nep.func_row(0.0), [1.0, 0.0, 0.0, 1.0, 1.0])

    def test_symmetric_flag(self):
        prob = build_random_split(10, seed=2, symmetric=True)
        for F in prob.nep.coeffs:
            Fd = coeff_dense(F)
            assert np.allclose(Fd, Fd.T, atol=1e-15)

    def test_third_coefficient_identity(self):
        prob = build_random_split(7, seed=3)
        assert np.array_equal(coeff_dense(prob.nep.coeffs[2]), np.eye(7))

    def test_determinism(self):
        a = build_random_split(6, seed=42)
        b = build_random_split(6, seed=42)
        for Fa, Fb in zip(a.nep.coeffs, b.nep.coeffs):
            assert np.array_equal(coeff_dense(Fa), coeff_dense(Fb))


class TestQuadraticLowRank:
    def test_rank_two_exact(self):
        prob = build_quadratic_lowrank(40, seed=4)
        A1 = prob.nep.coeffs[1]
        assert isinstance(A1, LowRankMatrix)
        assert np.linalg.matrix_rank(A1.toarray()) == 2

    def test_tridiagonal_row_sums(self):
        prob = build_quadratic_lowrank(20, seed=5)
        A0 = coeff_dense(prob.nep.coeffs[0])
        sums = A0.sum(axis=1)
        assert np.allclose(sums[1:-1], 0.0)

    def test_identity_third(self):
        prob = build_quadratic_lowrank(15, seed=6)
        assert np.array_equal(coeff_dense(prob.nep.coeffs[2]), np.eye(15))


class TestPerturbEnsemble:
    def test_structured_members_stay_feasible(self):
        prob = build_beam(20)
        for pert, mags, total in perturb_ensemble(prob, 5, (1e-6, 1e-2), seed=8):
            # identity coefficient stays a multiple of the identity
            I_pert = coeff_dense(pert.coeffs[0])
            c = np.trace(I_pert) / 20
            assert np.allclose(I_pert, c * np.eye(20), atol=1e-12)
            # sparsity patterns respected
            A0 = coeff_dense(prob.nep.coeffs[1])
            A0p = coeff_dense(pert.coeffs[1])
            assert np.all((A0p != 0) <= (A0 != 0))

    def test_fixed_rank_member_keeps_rank(self):
        prob = build_quadratic_lowrank(30, seed=9)
        pert, mags, _ = next(perturb_ensemble(prob, 1, (1e-2, 1e-2), seed=10))
        A1p = pert.coeffs[1]
        assert isinstance(A1p, LowRankMatrix)
        assert np.linalg.matrix_rank(A1p.toarray(), tol=1e-10) <= 2
        # magnitude honored
        delta = A1p.toarray() - prob.nep.coeffs[1].toarray()
        assert np.isclose(np.linalg.norm(delta), mags[1], rtol=1e-6)

    def test_magnitude_scaling(self):
        prob = build_random_split(10, seed=11)
        mags_seen = []
        for pert, mags, total in perturb_ensemble(prob, 20, (1e-8, 1e-1), seed=12):
            base = np.array([np.linalg.norm(coeff_dense(F)) for F in prob.nep.coeffs])
            rel = mags / np.maximum(base, 1.0)
            mags_seen.append(rel[0])
            assert np.all(rel <= 0.11)
            assert np.all(rel >= 0.9e-8)
        assert max(mags_seen) / min(mags_seen) > 100  # spread over decades

    def test_determinism(self):
        prob = build_random_split(8, seed=13)
        first = [coeff_dense(p.coeffs[0]) for p, _, _ in perturb_ensemble(prob, 3, seed=14)]
        second = [coeff_dense(p.coeffs[0]) for p, _, _ in perturb_ensemble(prob, 3, seed=14)]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)

    def test_sparse_split_patterns_differ(self):
        prob = build_random_sparse_split(24, seed=15)
        pats = [s.pattern for s in prob.specs]
        assert len({tuple(p) for p in pats}) >= 4

    def test_zero_magnitude_is_unperturbed(self):
        from nepbe.core import EigenpairSet
        from nepbe.unstructured import backward_error_exact

        prob = build_beam(12, dense=True)
        pert, mags, total = next(perturb_ensemble(prob, 1, (0.0, 0.0), seed=16))
        assert total == 0.0
        for F, Fp in zip(prob.nep.coeffs, pert.coeffs):
            assert np.array_equal(coeff_dense(F), coeff_dense(Fp))
        # exact pairs of the base problem stay exact: backward error 0
        from nepbe.gallery import default_newton_options
        from nepbe.newton import collect_pairs

        pairs, _ = collect_pairs(prob.nep, p=2, starts=10, seed=3,
                                 opts=default_newton_options(prob))
        eta = backward_error_exact(pert, pairs).eta
        assert eta <= 1e-10 * prob.nep.coefficient_norm()
