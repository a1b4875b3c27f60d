import numpy as np
import pytest

from proxsplit import AtosConfig, primal_value, solve
from proxsplit.problems import (
    ProblemSpec,
    box_blur_matrix,
    build_problem,
    calibrate_lambda,
    gen_autoregressive_design,
    gen_group_sparse_truth,
    gen_overlap_groups,
    solution_sparsity,
)


class TestDesignGenerator:
    def test_zero_corr_rows_independent(self):
        A = gen_autoregressive_design(2000, 5, 0.0, seed=0)
        cov = A.T @ A / 2000
        assert np.linalg.norm(cov - np.eye(5)) < 0.3

    def test_seed_determinism_bit_for_bit(self):
        A1 = gen_autoregressive_design(50, 20, 0.9, seed=123)
        A2 = gen_autoregressive_design(50, 20, 0.9, seed=123)
        assert A1.tobytes() == A2.tobytes()
        A3 = gen_autoregressive_design(50, 20, 0.9, seed=124)
        assert A1.tobytes() != A3.tobytes()

    def test_correlation_worsens_conditioning(self):
        conds_flat = [np.linalg.cond(gen_autoregressive_design(65, 65, 0.0, s))
                      for s in range(5)]
        conds_ar = [np.linalg.cond(gen_autoregressive_design(65, 65, 0.95, s))
                    for s in range(5)]
        assert np.median(conds_ar) > 3.0 * np.median(conds_flat)

    def test_recursion_structure(self):
        # the recursion is invertible: z_i = a_i - corr * a_{i-1}
        corr = 0.8
        A = gen_autoregressive_design(30, 4, corr, seed=5)
        Z = np.empty_like(A)
        Z[0] = A[0]
        Z[1:] = A[1:] - corr * A[:-1]
        A0 = gen_autoregressive_design(30, 4, 0.0, seed=5)
        np.testing.assert_allclose(Z, A0, atol=1e-12)

    def test_invalid_corr(self):
        with pytest.raises(ValueError):
            gen_autoregressive_design(5, 5, 1.0, 0)


class TestOverlapGroups:
    def test_p18_two_groups(self):
        split = gen_overlap_groups(18)
        groups = split.all_groups
        assert len(groups) == 2
        np.testing.assert_array_equal(split.subfamilies[0].groups[0], np.arange(10))
        np.testing.assert_array_equal(split.subfamilies[1].groups[0], np.arange(8, 18))

    def test_p1002_has_125_groups(self):
        split = gen_overlap_groups(1002)
        assert len(split.all_groups) == 125

    def test_within_subfamily_disjointness(self):
        for p in (18, 50, 106):
            split = gen_overlap_groups(p)
            for fam in split.subfamilies:
                seen = set()
                for g in fam.groups:
                    s = set(int(i) for i in g)
                    assert not (s & seen)
                    seen |= s

    def test_unrepresentable_p_raises(self):
        with pytest.raises(ValueError):
            gen_overlap_groups(20)


class TestGroupSparseTruth:
    def test_nonzero_budget(self):
        split = gen_overlap_groups(106)
        truth = gen_group_sparse_truth(split, seed=0)
        assert np.count_nonzero(truth) <= 100  # at most 10 groups of 10

    def test_chosen_groups_constant(self):
        # each draw writes one constant per group, so the whole vector holds
        # at most 10 distinct nonzero values (overlaps may overwrite)
        split = gen_overlap_groups(106)
        truth = gen_group_sparse_truth(split, seed=1)
        nz = truth[truth != 0.0]
        assert np.unique(nz).size <= 10

    def test_seed_reproducible(self):
        split = gen_overlap_groups(50)
        t1 = gen_group_sparse_truth(split, seed=3)
        t2 = gen_group_sparse_truth(split, seed=3)
        assert t1.tobytes() == t2.tobytes()


class TestBuildProblem:
    def test_tv_objective_finite_at_zero(self):
        spec = ProblemSpec(kind="tv2d_least_squares", rows=8, cols=8, lam=0.2, seed=0)
        problem, meta = build_problem(spec)
        assert np.isfinite(primal_value(problem, np.zeros(64)))

    def test_blur_matrix_rows_sum_to_one(self):
        B = box_blur_matrix(4, 5)
        np.testing.assert_allclose(B.sum(axis=1), np.ones(20), atol=1e-12)

    def test_trace_problem_sample_count(self):
        spec = ProblemSpec(kind="trace_l1_least_squares", rows=5, cols=5, seed=0)
        problem, meta = build_problem(spec)
        # twice as many samples as features by default
        assert problem.f is not None and problem.dim == 25

    def test_beta_h_wiring(self):
        spec = ProblemSpec(kind="overlap_group_lasso_logistic", n=40, p=26,
                           lam=0.1, seed=0)
        problem, meta = build_problem(spec)
        n_odd_groups = len(gen_overlap_groups(26).subfamilies[1].groups)
        assert meta["beta_h"] == pytest.approx(0.1 * np.sqrt(n_odd_groups))

    def test_doubly_stochastic_has_no_lipschitz_bound(self):
        spec = ProblemSpec(kind="doubly_stochastic_qp", n=5, seed=0)
        problem, meta = build_problem(spec)
        assert meta["beta_h"] is None

    def test_unknown_kind_rejected_by_spec(self):
        with pytest.raises(ValueError):
            ProblemSpec(kind="nonexistent_problem")

    def test_spec_json_roundtrip(self):
        spec = ProblemSpec(kind="tv2d_least_squares", rows=6, cols=7, lam=0.3,
                           corr=0.5, seed=9, noise_sd=0.4)
        again = ProblemSpec.from_json(spec.to_json())
        assert again == spec

    def test_spec_json_rejects_unknown_fields(self):
        with pytest.raises(ValueError):
            ProblemSpec.from_json('{"kind": "doubly_stochastic_qp", "bogus": 1}')


class TestCalibration:
    def test_sparsity_brackets(self):
        spec = ProblemSpec(kind="overlap_group_lasso_logistic", n=80, p=26,
                           corr=0.5, seed=0, lam=0.05)
        lam_high = calibrate_lambda(spec, 0.40, 0.60, solve_tol=1e-8,
                                    max_iter=30_000)
        lam_low = calibrate_lambda(spec, 0.02, 0.10, solve_tol=1e-8,
                                   max_iter=30_000)
        assert lam_low < lam_high
        for lam, lo, hi in ((lam_high, 0.40, 0.60), (lam_low, 0.02, 0.10)):
            import dataclasses
            problem, meta = build_problem(dataclasses.replace(spec, lam=lam))
            result = solve(problem, np.zeros(problem.dim),
                           config=AtosConfig(variant="v2", beta_h=meta["beta_h"],
                                             tol=1e-8, max_iter=30_000))
            frac = solution_sparsity(result.x_last)
            assert lo <= frac <= hi
