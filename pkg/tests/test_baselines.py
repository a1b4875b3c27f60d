import numpy as np
import pytest

from proxsplit import (
    AtosConfig,
    CompositeProblem,
    PdhgConfig,
    pdhg_solve,
    primal_value,
    solve,
    tos_fixed_solve,
    zero_penalty,
)
from proxsplit.baselines import moreau_dual_prox
from proxsplit.losses import Dataset, least_squares_oracle, logistic_oracle
from proxsplit.problems import ProblemSpec, build_problem
from proxsplit.prox_ops import l1_penalty

from conftest import make_l1_split_lasso
from oracles import prox_gradient_reference

rng = np.random.default_rng(31)


class TestTosFixed:
    def test_pure_smooth_is_gradient_descent(self):
        A = np.eye(3) * 2.0
        f = least_squares_oracle(Dataset(A, np.zeros(3)))
        problem = CompositeProblem(f=f, g=zero_penalty(), h=zero_penalty(), dim=3)
        gamma = 0.05
        result = tos_fixed_solve(problem, np.array([1.0, -2.0, 0.5]), gamma,
                                 max_iter=3, tol=0.0, keep_iterates=True)
        y = np.array([1.0, -2.0, 0.5])
        for (x, z, y_next) in result.history:
            np.testing.assert_allclose(x, y - gamma * f.gradient_at(y), atol=1e-15)
            y = y_next

    def test_lasso_matches_reference(self):
        r = np.random.default_rng(2)
        A = r.standard_normal((10, 5))
        b = r.standard_normal(10)
        lam = 0.5
        f = least_squares_oracle(Dataset(A, b))
        problem = CompositeProblem(f=f, g=l1_penalty(lam, 5), h=zero_penalty(), dim=5)
        result = tos_fixed_solve(problem, np.zeros(5), 1.0 / f.lipschitz_estimate,
                                 max_iter=200_000, tol=1e-13)
        assert result.converged
        ref = prox_gradient_reference(
            f.value_at, f.gradient_at,
            lambda v, g: np.sign(v) * np.maximum(np.abs(v) - g * lam, 0.0),
            np.zeros(5), step=1.0 / f.lipschitz_estimate, backtracking=False,
            tol=1e-15)
        assert np.max(np.abs(result.x - ref)) < 1e-8

    def test_invalid_gamma(self):
        problem, _ = make_l1_split_lasso()
        with pytest.raises(ValueError):
            tos_fixed_solve(problem, np.zeros(problem.dim), 0.0)


class TestMoreauWiring:
    def test_dual_prox_consistent_with_primal(self):
        lam = 0.7
        pen = l1_penalty(lam, 6)
        for _ in range(20):
            x = rng.standard_normal(6) * 2
            gamma = float(rng.choice([0.3, 1.0, 2.4]))
            lhs = pen.prox_at(x, gamma)
            rhs = x - gamma * moreau_dual_prox(pen, x / gamma, 1.0 / gamma)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestPdhg:
    def test_h_zero_solves_f_plus_g(self):
        r = np.random.default_rng(3)
        A = r.standard_normal((12, 6))
        b = r.standard_normal(12)
        lam = 0.4
        f = least_squares_oracle(Dataset(A, b))
        problem = CompositeProblem(f=f, g=l1_penalty(lam, 6), h=zero_penalty(), dim=6)
        config = PdhgConfig(L_f=f.lipschitz_estimate, beta=0.5, max_iter=200_000,
                            tol=1e-12)
        result = pdhg_solve(problem, np.zeros(6), config=config)
        assert result.converged
        ref = prox_gradient_reference(
            f.value_at, f.gradient_at,
            lambda v, g: np.sign(v) * np.maximum(np.abs(v) - g * lam, 0.0),
            np.zeros(6), step=1.0 / f.lipschitz_estimate, backtracking=False,
            tol=1e-15)
        assert np.max(np.abs(result.x - ref)) < 1e-7

    def test_dual_iterates_stay_in_conjugate_domain(self):
        problem, lam = make_l1_split_lasso(seed=8)
        config = PdhgConfig(L_f=problem.f.lipschitz_estimate, beta=0.5,
                            max_iter=50, tol=0.0)
        result = pdhg_solve(problem, np.zeros(problem.dim), config=config)
        assert np.max(np.abs(result.u)) <= lam + 1e-12

    def test_step_size_invariants(self):
        config = PdhgConfig(L_f=4.0, beta=0.3)
        assert config.tau == pytest.approx(2 * 0.7 / 4.0 * (1 - 1e-6))
        assert config.sigma == pytest.approx(0.3 / config.tau)
        with pytest.raises(ValueError):
            PdhgConfig(L_f=1.0, beta=1.0)

    def test_config_required(self):
        problem, _ = make_l1_split_lasso()
        with pytest.raises(ValueError):
            pdhg_solve(problem, np.zeros(problem.dim))


class TestThreeSolverAgreement:
    def test_final_primal_agreement_on_group_lasso(self):
        spec = ProblemSpec(kind="overlap_group_lasso_logistic", n=60, p=26,
                           lam=0.05, corr=0.5, seed=0)
        problem, meta = build_problem(spec)
        L = meta["L_f"]
        adaptive = solve(problem, np.zeros(problem.dim),
                         config=AtosConfig(variant="v2", beta_h=meta["beta_h"],
                                           tol=1e-11, max_iter=100_000))
        fixed = tos_fixed_solve(problem, np.zeros(problem.dim), 1.0 / L,
                                max_iter=300_000, tol=1e-11)
        pdhg = pdhg_solve(problem, np.zeros(problem.dim),
                          config=PdhgConfig(L_f=L, beta=0.5, max_iter=300_000,
                                            tol=1e-11))
        assert adaptive.converged and fixed.converged and pdhg.converged
        p0 = primal_value(problem, adaptive.x_last)
        for other in (fixed.x, pdhg.x):
            assert abs(primal_value(problem, other) - p0) <= 1e-6 * max(1.0, abs(p0))
