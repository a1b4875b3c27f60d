"""Problem abstractions shared by every solver in the package.

A problem is a triple (f, g, h): a smooth term f accessed through value and
gradient callables, and two (possibly nonsmooth, possibly extended-valued)
terms g and h accessed through their proximal operators.  All unknowns are
dense 1-D float64 arrays; matrix-shaped unknowns are stored flattened
row-major, with the (rows, cols) shape carried by whoever built the problem.

This module also defines the one-step splitting map that underlies the
solvers: its fixed points are exactly the pairs (primal solution, dual
solution), which makes the distance moved by one application a principled
stopping criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SmoothOracle",
    "ProxOperator",
    "CompositeProblem",
    "SolverState",
    "TraceRecord",
    "NonconvergenceError",
    "zero_penalty",
    "primal_value",
    "saddle_value",
    "quadratic_model",
    "fixed_point_map",
    "fixed_point_residual",
]


class NonconvergenceError(RuntimeError):
    """Raised when a solver cannot make progress (e.g. line search stalls)."""


@dataclass(frozen=True)
class SmoothOracle:
    """Smooth term: point evaluations of f(x) and its gradient.

    ``lipschitz_estimate``, when set, is an upper bound on the Lipschitz
    constant of the gradient.
    """

    value_at: Callable[[np.ndarray], float]
    gradient_at: Callable[[np.ndarray], np.ndarray]
    lipschitz_estimate: Optional[float] = None


@dataclass(frozen=True)
class ProxOperator:
    """Proximal term phi.

    ``prox_at(x, gamma)`` returns the minimizer of
    ``phi(z) + ||z - x||^2 / (2 gamma)``.  ``value_at`` evaluates phi and may
    return +inf (indicator functions).  ``lipschitz_bound``, when set, is a
    global Lipschitz constant of phi.  ``conjugate_value_at``, when set,
    evaluates the Fenchel conjugate phi* and is only needed by the
    saddle-point diagnostics.
    """

    prox_at: Callable[[np.ndarray, float], np.ndarray]
    value_at: Callable[[np.ndarray], float]
    lipschitz_bound: Optional[float] = None
    is_indicator: bool = False
    conjugate_value_at: Optional[Callable[[np.ndarray], float]] = None


def zero_penalty() -> ProxOperator:
    """The identically-zero penalty: its prox is the identity."""
    return ProxOperator(
        prox_at=lambda x, gamma: np.asarray(x, dtype=float).copy(),
        value_at=lambda x: 0.0,
        lipschitz_bound=0.0,
        is_indicator=False,
        conjugate_value_at=lambda u: 0.0 if np.max(np.abs(u), initial=0.0) <= 1e-12 else np.inf,
    )


@dataclass(frozen=True)
class CompositeProblem:
    """The triple (f, g, h) plus optional curvature metadata.

    ``mu_f`` is a strong-convexity constant of f and ``L_h`` a smoothness
    constant of h; both are only used by diagnostics.  ``dim``, when set,
    enables dimension checking of incoming vectors.
    """

    f: SmoothOracle
    g: ProxOperator
    h: ProxOperator
    mu_f: Optional[float] = None
    L_h: Optional[float] = None
    dim: Optional[int] = None

    def check_dim(self, x: np.ndarray) -> None:
        if self.dim is not None and x.shape != (self.dim,):
            raise ValueError(
                f"expected a vector of dimension {self.dim}, got shape {x.shape}"
            )


@dataclass
class SolverState:
    """Mutable per-run state of the adaptive splitting solver.

    ``gamma`` is the candidate step size for the next iteration,
    ``gamma_prev`` / ``delta_prev`` the accepted step size and line-search
    surplus of the previous iteration, and ``s`` the sum of all accepted step
    sizes (the normalizer of the step-weighted averages).
    """

    z: np.ndarray
    u: np.ndarray
    x: np.ndarray
    gamma: float
    gamma_prev: float
    delta_prev: float
    ergodic_x_sum: np.ndarray
    ergodic_u_sum: np.ndarray
    s: float = 0.0
    iter: int = 0
    n_grad: int = 0
    n_func: int = 0
    n_prox: int = 0
    backtracks_last: int = 0

    @classmethod
    def initial(cls, z0: np.ndarray, u0: np.ndarray, gamma0: float) -> "SolverState":
        z0 = np.asarray(z0, dtype=float)
        u0 = np.asarray(u0, dtype=float)
        return cls(
            z=z0.copy(),
            u=u0.copy(),
            x=z0.copy(),
            gamma=float(gamma0),
            gamma_prev=float(gamma0),
            delta_prev=0.0,
            ergodic_x_sum=np.zeros_like(z0),
            ergodic_u_sum=np.zeros_like(u0),
        )


@dataclass
class TraceRecord:
    """One per-iteration benchmark row.

    Counters are cumulative.  ``subopt`` is filled in after a benchmark run,
    once the best primal value across all runs is known.
    """

    iter: int
    wall_ns: int
    step_size: float
    n_grad: int
    n_func: int
    n_prox: int
    primal: float
    residual: float
    subopt: Optional[float] = None


def primal_value(problem: CompositeProblem, x: np.ndarray) -> float:
    """f(x) + g(x) + h(x); +inf whenever an indicator term is violated."""
    x = np.asarray(x, dtype=float)
    problem.check_dim(x)
    gx = problem.g.value_at(x)
    hx = problem.h.value_at(x)
    if not np.isfinite(gx) or not np.isfinite(hx):
        return np.inf
    return float(problem.f.value_at(x)) + float(gx) + float(hx)


def saddle_value(problem: CompositeProblem, x: np.ndarray, u: np.ndarray) -> float:
    """The saddle function f(x) + g(x) + <x, u> - h*(u).

    Requires ``problem.h.conjugate_value_at``.
    """
    if problem.h.conjugate_value_at is None:
        raise ValueError("saddle_value needs a closed-form conjugate for h")
    hstar = problem.h.conjugate_value_at(u)
    if not np.isfinite(hstar):
        return -np.inf if hstar > 0 else np.inf
    return (
        float(problem.f.value_at(x))
        + float(problem.g.value_at(x))
        + float(np.dot(x, u))
        - float(hstar)
    )


def quadratic_model(fz: float, grad_z: np.ndarray, z: np.ndarray,
                    x: np.ndarray, gamma: float) -> float:
    """Quadratic tangent to f at z with curvature 1/gamma, evaluated at x."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    diff = x - z
    return float(fz) + float(np.dot(grad_z, diff)) + float(np.dot(diff, diff)) / (2.0 * gamma)


def fixed_point_map(problem: CompositeProblem, z: np.ndarray, u: np.ndarray,
                    gamma: float):
    """One application of the splitting map at step size gamma.

    Returns ``(z_next, u_next, x)`` where x is the forward-backward point.
    The fixed points of this map are exactly the Cartesian products of primal
    and dual solutions, for every gamma > 0.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    problem.check_dim(z)
    if z.shape != u.shape:
        raise ValueError("z and u must have the same shape")
    grad = problem.f.gradient_at(z)
    x = problem.g.prox_at(z - gamma * (u + grad), gamma)
    z_next = problem.h.prox_at(x + gamma * u, gamma)
    u_next = u + (x - z_next) / gamma
    return z_next, u_next, x


def fixed_point_residual(problem: CompositeProblem, z: np.ndarray,
                         u: np.ndarray, gamma: float) -> float:
    """Scaled distance moved by one application of the splitting map.

    The dual displacement is scaled by gamma so the criterion does not depend
    on the ambient scaling of the dual variable; the result is normalized by
    max(1, ||z||).  Zero exactly at primal-dual solutions.
    """
    z_next, u_next, _ = fixed_point_map(problem, z, u, gamma)
    num = np.sqrt(
        float(np.dot(z_next - z, z_next - z))
        + gamma * gamma * float(np.dot(u_next - u, u_next - u))
    )
    return num / max(1.0, float(np.linalg.norm(z)))
