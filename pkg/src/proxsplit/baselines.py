"""Fixed-step baselines: Davis-Yin three-operator splitting and PDHG.

Both are used as correctness cross-checks for the adaptive solver and as
benchmark comparison points.  The PDHG (Condat-Vu) dual prox is derived from
the primal prox through Moreau's decomposition, so no conjugate prox needs
to be supplied.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import (
    CompositeProblem,
    ProxOperator,
    TraceRecord,
    fixed_point_residual,
    primal_value,
)

__all__ = ["BaselineResult", "tos_fixed_solve", "PdhgConfig", "pdhg_solve",
           "moreau_dual_prox"]


@dataclass
class BaselineResult:
    x: np.ndarray
    u: np.ndarray
    iterations: int
    converged: bool
    trace: List[TraceRecord]
    history: Optional[list] = None


def tos_fixed_solve(problem: CompositeProblem, y0, gamma: float,
                    max_iter: int = 1000, tol: float = 1e-10,
                    keep_iterates: bool = False) -> BaselineResult:
    """Three-operator splitting with a constant step size.

    Iterates ``z = prox_h(y)``, ``x = prox_g(2 z - y - gamma grad f(z))``,
    ``y <- y - z + x`` and stops once ``||y_next - y|| / gamma`` drops below
    ``tol * max(1, ||z||)``.  Convergent for steps below 2 / L_f.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    f, g, h = problem.f, problem.g, problem.h
    y = np.asarray(y0, dtype=float).copy()
    problem.check_dim(y)
    n_grad = n_prox = 0
    trace: List[TraceRecord] = []
    history = [] if keep_iterates else None
    t0 = time.perf_counter_ns()
    converged = math.isinf(tol) and tol > 0
    z = y.copy()
    x = y.copy()
    it = 0
    if not converged:
        for it in range(1, max_iter + 1):
            z = h.prox_at(y, gamma)
            n_prox += 1
            grad = f.gradient_at(z)
            n_grad += 1
            x = g.prox_at(2.0 * z - y - gamma * grad, gamma)
            n_prox += 1
            y_next = y - z + x
            residual = float(np.linalg.norm(y_next - y)) / gamma \
                / max(1.0, float(np.linalg.norm(z)))
            trace.append(TraceRecord(
                iter=it,
                wall_ns=time.perf_counter_ns() - t0,
                step_size=gamma,
                n_grad=n_grad,
                n_func=0,
                n_prox=n_prox,
                primal=primal_value(problem, x),
                residual=residual,
            ))
            if history is not None:
                history.append((x, z, y_next))
            y = y_next
            if residual <= tol:
                converged = True
                break
    u = (y - x) / gamma  # dual iterate consistent with the splitting map
    return BaselineResult(x=x, u=u, iterations=it, converged=converged,
                          trace=trace, history=history)


@dataclass
class PdhgConfig:
    """PDHG step sizes from a single balance parameter beta in (0, 1).

    The primal step is ``tau = 2 (1 - beta) / L_f`` shaved by a 1e-6 relative
    safety margin to keep the convergence condition strict; the dual step is
    ``sigma = beta / tau``.
    """

    L_f: float
    beta: float = 0.5
    max_iter: int = 1000
    tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.L_f <= 0:
            raise ValueError("L_f must be positive")

    @property
    def tau(self) -> float:
        return 2.0 * (1.0 - self.beta) / self.L_f * (1.0 - 1e-6)

    @property
    def sigma(self) -> float:
        return self.beta / self.tau


def moreau_dual_prox(h: ProxOperator, v: np.ndarray, sigma: float) -> np.ndarray:
    """prox of sigma * h^* evaluated through the primal prox (Moreau)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return v - sigma * h.prox_at(v / sigma, 1.0 / sigma)


def pdhg_solve(problem: CompositeProblem, x0, u0=None,
               config: Optional[PdhgConfig] = None) -> BaselineResult:
    """Condat-Vu primal-dual iteration with the gradient at the previous
    primal iterate and dual extrapolation ``2 u_next - u``.

    The stopping criterion is the fixed-point residual of the splitting map
    at (x, u), evaluated with the primal step size.
    """
    if config is None:
        raise ValueError("pdhg_solve requires a PdhgConfig (L_f is mandatory)")
    f, g, h = problem.f, problem.g, problem.h
    x = np.asarray(x0, dtype=float).copy()
    problem.check_dim(x)
    u = np.zeros_like(x) if u0 is None else np.asarray(u0, dtype=float).copy()
    tau, sigma = config.tau, config.sigma
    n_grad = n_prox = 0
    trace: List[TraceRecord] = []
    t0 = time.perf_counter_ns()
    converged = math.isinf(config.tol) and config.tol > 0
    it = 0
    if not converged:
        for it in range(1, config.max_iter + 1):
            u_next = moreau_dual_prox(h, u + sigma * x, sigma)
            n_prox += 1
            grad = f.gradient_at(x)
            n_grad += 1
            x_next = g.prox_at(x - tau * (grad + 2.0 * u_next - u), tau)
            n_prox += 1
            x, u = x_next, u_next
            residual = fixed_point_residual(problem, x, u, tau)
            trace.append(TraceRecord(
                iter=it,
                wall_ns=time.perf_counter_ns() - t0,
                step_size=tau,
                n_grad=n_grad,
                n_func=0,
                n_prox=n_prox,
                primal=primal_value(problem, x),
                residual=residual,
            ))
            if residual <= config.tol:
                converged = True
                break
    return BaselineResult(x=x, u=u, iterations=it, converged=converged, trace=trace)
