import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proxsplit import AtosConfig, CompositeProblem, solve
from proxsplit.losses import Dataset, least_squares_oracle
from proxsplit.prox_ops import l1_penalty


def make_l1_split_lasso(seed=0, n=20, p=10, lam=0.4):
    """Least squares with the l1 penalty split evenly into g and h."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    b = rng.standard_normal(n)
    f = least_squares_oracle(Dataset(A, b))
    return CompositeProblem(f=f, g=l1_penalty(lam, p), h=l1_penalty(lam, p), dim=p), lam


@pytest.fixture(scope="session")
def l1_split_lasso():
    return make_l1_split_lasso()


@pytest.fixture(scope="session")
def solved_l1_split_lasso(l1_split_lasso):
    problem, lam = l1_split_lasso
    config = AtosConfig(variant="v2", beta_h=lam * np.sqrt(problem.dim),
                        tol=1e-13, max_iter=50_000)
    result = solve(problem, np.zeros(problem.dim), config=config)
    assert result.converged
    return problem, lam, result
