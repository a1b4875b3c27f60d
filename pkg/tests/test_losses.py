import numpy as np
import pytest

from proxsplit.losses import (
    Dataset,
    gram_largest_eigenvalue,
    least_squares_oracle,
    logistic_oracle,
)

from oracles import finite_difference_gradient

rng = np.random.default_rng(7)


def random_logistic_data(n=20, p=8, seed=0):
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, p))
    b = np.where(r.random(n) < 0.5, 1.0, -1.0)
    return Dataset(A, b)


class TestDataset:
    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(4))


class TestLeastSquares:
    def test_identity_example(self):
        f = least_squares_oracle(Dataset(np.eye(2), np.zeros(2)))
        x = np.array([1.0, 1.0])
        assert f.value_at(x) == 2.0
        np.testing.assert_array_equal(f.gradient_at(x), [2.0, 2.0])

    def test_gradient_matches_finite_differences(self):
        A = rng.standard_normal((12, 5))
        b = rng.standard_normal(12)
        f = least_squares_oracle(Dataset(A, b))
        for _ in range(20):
            x = rng.standard_normal(5)
            fd = finite_difference_gradient(f.value_at, x)
            g = f.gradient_at(x)
            assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))

    def test_power_iteration_matches_dense_eigensolver(self):
        A = rng.standard_normal((10, 6))
        lam = gram_largest_eigenvalue(A)
        dense = np.linalg.eigvalsh(A.T @ A).max()
        assert lam == pytest.approx(dense, rel=1e-6)

    def test_mean_scaling(self):
        A = rng.standard_normal((8, 3))
        b = rng.standard_normal(8)
        f = least_squares_oracle(Dataset(A, b), mean=True)
        x = rng.standard_normal(3)
        r = b - A @ x
        assert f.value_at(x) == pytest.approx(float(r @ r) / 8.0, rel=1e-14)


class TestLogistic:
    def test_value_at_zero_is_log2(self):
        data = random_logistic_data()
        f = logistic_oracle(data)
        assert f.value_at(np.zeros(8)) == pytest.approx(np.log(2.0), rel=1e-12)

    def test_scalar_sigmoid_gradient(self):
        data = Dataset(np.array([[1.0]]), np.array([1.0]))
        f = logistic_oracle(data)
        assert f.gradient_at(np.zeros(1))[0] == pytest.approx(-0.5, rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        f = logistic_oracle(random_logistic_data(20, 8, seed=3))
        for _ in range(20):
            x = rng.standard_normal(8)
            fd = finite_difference_gradient(f.value_at, x)
            g = f.gradient_at(x)
            assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))

    def test_labels_must_be_pm_one(self):
        with pytest.raises(ValueError):
            logistic_oracle(Dataset(np.eye(2), np.array([1.0, 0.0])))

    def test_no_overflow_at_huge_margins(self):
        data = Dataset(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))
        f = logistic_oracle(data)
        for t in (1e4, -1e4, 1e6):
            x = np.array([t])
            assert np.isfinite(f.value_at(x))
            assert np.all(np.isfinite(f.gradient_at(x)))


class TestSharedProperties:
    def oracles(self):
        A = rng.standard_normal((15, 6))
        return [
            least_squares_oracle(Dataset(A, rng.standard_normal(15))),
            logistic_oracle(random_logistic_data(15, 6, seed=5)),
        ]

    def test_convex_along_random_lines(self):
        for f in self.oracles():
            for _ in range(20):
                x = rng.standard_normal(6)
                y = rng.standard_normal(6)
                mid = f.value_at(0.5 * (x + y))
                assert mid <= 0.5 * (f.value_at(x) + f.value_at(y)) + 1e-12

    def test_sufficient_decrease_at_inverse_lipschitz_step(self):
        for f in self.oracles():
            L = f.lipschitz_estimate
            for _ in range(20):
                x = rng.standard_normal(6)
                g = f.gradient_at(x)
                x_plus = x - g / L
                fx = f.value_at(x)
                model = fx + g @ (x_plus - x) + L / 2.0 * float((x_plus - x) @ (x_plus - x))
                assert f.value_at(x_plus) <= model + abs(fx) * 1e-12

    def test_lipschitz_estimate_bounds_gradient_variation(self):
        for f in self.oracles():
            L = f.lipschitz_estimate
            for _ in range(20):
                x = rng.standard_normal(6)
                y = rng.standard_normal(6)
                lhs = np.linalg.norm(f.gradient_at(x) - f.gradient_at(y))
                assert lhs <= L * np.linalg.norm(x - y) * (1 + 1e-9)
