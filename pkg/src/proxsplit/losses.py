"""Smooth loss terms: least squares and logistic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SmoothOracle

__all__ = ["Dataset", "gram_largest_eigenvalue", "least_squares_oracle", "logistic_oracle"]


@dataclass(frozen=True)
class Dataset:
    """Design matrix A (n x p) and target vector b (n)."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"inconsistent shapes A {A.shape}, b {b.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


def gram_largest_eigenvalue(A, tol=1e-10, max_iter=10_000):
    """Largest eigenvalue of A^T A by power iteration.

    Deterministic: starts from a fixed slightly-tilted vector so the iterate
    is never orthogonal to the leading eigenspace by accident.
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[1]
    v = 1.0 + 1e-3 * np.arange(p)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(np.dot(v, w))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def least_squares_oracle(data: Dataset, mean: bool = False) -> SmoothOracle:
    """Squared-residual loss ||b - A x||^2 (optionally scaled by 1/n).

    The gradient Lipschitz estimate is 2 lambda_max(A^T A) (divided by n when
    ``mean`` is set), computed by power iteration.
    """
    A, b = data.A, data.b
    scale = 1.0 / A.shape[0] if mean else 1.0

    def value(x):
        r = b - A @ x
        return scale * float(np.dot(r, r))

    def gradient(x):
        return -2.0 * scale * (A.T @ (b - A @ x))

    return SmoothOracle(
        value_at=value,
        gradient_at=gradient,
        lipschitz_estimate=2.0 * scale * gram_largest_eigenvalue(A),
    )


def logistic_oracle(data: Dataset) -> SmoothOracle:
    """Mean logistic loss (1/n) sum log(1 + exp(-b_i a_i^T x)), labels in {-1,+1}.

    Uses logaddexp so values and gradients stay finite for margins up to 1e4
    and beyond.  The Lipschitz estimate is lambda_max(A^T A) / (4 n), from the
    1/4 bound on the sigmoid derivative.
    """
    A, b = data.A, data.b
    if not np.all(np.abs(b) == 1.0):
        raise ValueError("logistic labels must be exactly +-1")
    n = A.shape[0]

    def value(x):
        margins = b * (A @ x)
        return float(np.mean(np.logaddexp(0.0, -margins)))

    def gradient(x):
        margins = b * (A @ x)
        # sigma(-m) computed stably for both signs of m
        sig = np.exp(-np.logaddexp(0.0, margins))
        return -(A.T @ (b * sig)) / n

    return SmoothOracle(
        value_at=value,
        gradient_at=gradient,
        lipschitz_estimate=gram_largest_eigenvalue(A) / (4.0 * n),
    )
