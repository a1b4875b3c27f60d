"""Splitting solver for a smooth term plus k proximal terms.

The sum ``phi(x) + h_1(x) + ... + h_k(x)`` is lifted to a k x p product
space where the rows are forced to agree by a consensus indicator whose prox
is row averaging.  Applying the adaptive splitting there gives an algorithm
that keeps one consensus vector and two k x p matrices of per-term primal
and dual blocks; the per-term prox updates within an iteration are
independent of each other.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .atos import AtosConfig, AtosResult, _estimate_gamma0, grow_step
from .core import NonconvergenceError, ProxOperator, SmoothOracle, TraceRecord

__all__ = [
    "MultiProxProblem",
    "ProductState",
    "multi_primal_value",
    "multi_quadratic_model",
    "multi_step",
    "multi_solve",
]

DECREASE_SLACK = 1e-12


@dataclass(frozen=True)
class MultiProxProblem:
    """A smooth term plus k >= 1 proximal terms on a common p-vector.

    ``beta_h``, when set, is a Lipschitz bound shared by every term (needed
    by the growing-step policy).
    """

    phi: SmoothOracle
    terms: tuple
    beta_h: Optional[float] = None
    dim: Optional[int] = None

    def __init__(self, phi, terms: Sequence[ProxOperator], beta_h=None, dim=None):
        if len(terms) < 1:
            raise ValueError("need at least one proximal term")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "beta_h", beta_h)
        object.__setattr__(self, "dim", dim)

    @property
    def k(self) -> int:
        return len(self.terms)

    def check_dim(self, x: np.ndarray) -> None:
        if self.dim is not None and x.shape != (self.dim,):
            raise ValueError(
                f"expected a vector of dimension {self.dim}, got shape {x.shape}"
            )


@dataclass
class ProductState:
    """Product-space iterate: one p-vector and two k x p matrices."""

    x: np.ndarray
    Z: np.ndarray
    U: np.ndarray
    gamma: float
    gamma_prev: float
    delta_prev: float
    s: float = 0.0
    iter: int = 0
    n_grad: int = 0
    n_func: int = 0
    n_prox: int = 0
    backtracks_last: int = 0

    @classmethod
    def initial(cls, z0: np.ndarray, u0: np.ndarray, k: int, gamma0: float):
        z0 = np.asarray(z0, dtype=float)
        u0 = np.asarray(u0, dtype=float)
        return cls(
            x=z0.copy(),
            Z=np.tile(z0, (k, 1)),
            U=np.tile(u0, (k, 1)),
            gamma=float(gamma0),
            gamma_prev=float(gamma0),
            delta_prev=0.0,
        )


def multi_primal_value(problem: MultiProxProblem, x: np.ndarray) -> float:
    """phi(x) + sum_j h_j(x); +inf when an indicator term is violated."""
    vals = [term.value_at(x) for term in problem.terms]
    if any(not np.isfinite(v) for v in vals):
        return np.inf
    return float(problem.phi.value_at(x)) + float(sum(vals))


def multi_quadratic_model(phi: SmoothOracle, zbar: np.ndarray, x: np.ndarray,
                          Z: np.ndarray, gamma: float) -> float:
    """Tangent model of phi at the consensus average with a product-space
    quadratic: phi(zbar) + <grad phi(zbar), x - zbar> + ||x 1^T - Z||_F^2 / (2 gamma)."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    diff = x[None, :] - Z
    return (
        float(phi.value_at(zbar))
        + float(np.dot(phi.gradient_at(zbar), x - zbar))
        + float(np.sum(diff * diff)) / (2.0 * gamma)
    )


def multi_step(problem: MultiProxProblem, state: ProductState,
               config: AtosConfig) -> ProductState:
    """One outer iteration of the product-space solver, in place."""
    k = problem.k
    zbar = state.Z.mean(axis=0)
    ubar = state.U.mean(axis=0)
    phi_zbar = float(problem.phi.value_at(zbar))
    grad = problem.phi.gradient_at(zbar)
    state.n_func += 1
    state.n_grad += 1
    gamma = state.gamma
    r = grad / k
    backtracks = 0
    while True:
        x = zbar - gamma * ubar - gamma * r
        diff = x[None, :] - state.Z
        model = phi_zbar + float(np.dot(grad, x - zbar)) \
            + float(np.sum(diff * diff)) / (2.0 * gamma)
        fx = float(problem.phi.value_at(x))
        state.n_func += 1
        delta = model - fx
        if delta >= -abs(phi_zbar) * DECREASE_SLACK:
            break
        backtracks += 1
        if backtracks > config.max_backtracks:
            raise NonconvergenceError(
                f"line search exceeded {config.max_backtracks} backtracks "
                f"at iteration {state.iter}"
            )
        gamma *= config.tau

    Z_next = np.empty_like(state.Z)
    for j, term in enumerate(problem.terms):
        Z_next[j] = term.prox_at(x + gamma * state.U[j], gamma)
        state.n_prox += 1
    state.U = state.U + (x[None, :] - Z_next) / gamma
    state.Z = Z_next
    state.x = x
    state.s += gamma
    delta = max(delta, 0.0)
    state.gamma_prev = gamma
    state.delta_prev = delta
    beta_h = config.beta_h if config.beta_h is not None else problem.beta_h
    if config.variant == "v2" and beta_h is not None:
        state.gamma = grow_step(gamma, delta, beta_h, config.growth_cap_exponent)
    else:
        state.gamma = gamma
    state.iter += 1
    state.backtracks_last = backtracks
    return state


def multi_solve(problem: MultiProxProblem, z0, u0=None,
                config: Optional[AtosConfig] = None) -> AtosResult:
    """Run the product-space solver and return the consensus solution.

    The residual is the scaled product-space displacement of one accepted
    step; at convergence all per-term blocks agree with their average up to
    the tolerance.
    """
    config = config or AtosConfig()
    z0 = np.asarray(z0, dtype=float)
    u0 = np.zeros_like(z0) if u0 is None else np.asarray(u0, dtype=float)
    problem.check_dim(z0)
    if z0.shape != u0.shape:
        raise ValueError("z0 and u0 must have the same shape")

    beta_h = config.beta_h if config.beta_h is not None else problem.beta_h
    downgraded = config.variant == "v2" and beta_h is None
    state = ProductState.initial(z0, u0, problem.k, 1.0)
    if config.gamma0 is not None:
        gamma0 = float(config.gamma0)
    else:
        gamma0, nf, ng = _estimate_gamma0(problem.phi, z0)
        state.n_func += nf
        state.n_grad += ng
    state.gamma = state.gamma_prev = gamma0

    ergodic_x = np.zeros_like(z0)
    ergodic_u = np.zeros_like(u0)
    trace: List[TraceRecord] = []
    history = [] if config.keep_iterates else None
    t0 = time.perf_counter_ns()
    converged = math.isinf(config.tol) and config.tol > 0
    if not converged:
        for _ in range(config.max_iter):
            Z_prev, U_prev = state.Z, state.U
            multi_step(problem, state, config)
            gamma_acc = state.gamma_prev
            dZ = state.Z - Z_prev
            dU = state.U - U_prev
            residual = math.sqrt(
                float(np.sum(dZ * dZ)) + gamma_acc ** 2 * float(np.sum(dU * dU))
            ) / max(1.0, float(np.linalg.norm(Z_prev)))
            ergodic_x += gamma_acc * state.x
            ergodic_u += gamma_acc * state.U.mean(axis=0)
            trace.append(TraceRecord(
                iter=state.iter,
                wall_ns=time.perf_counter_ns() - t0,
                step_size=gamma_acc,
                n_grad=state.n_grad,
                n_func=state.n_func,
                n_prox=state.n_prox,
                primal=multi_primal_value(problem, state.x),
                residual=residual,
            ))
            if history is not None:
                history.append((state.x, state.U.mean(axis=0), gamma_acc))
            if residual <= config.tol:
                converged = True
                break

    if state.s > 0.0:
        x_erg = ergodic_x / state.s
        u_erg = ergodic_u / state.s
    else:
        x_erg, u_erg = z0.copy(), u0.copy()
    x_last = state.x if state.iter > 0 else z0.copy()
    u_last = state.U.mean(axis=0) if state.iter > 0 else u0.copy()
    x_out, u_out = x_last, u_last
    if config.report_best_of_last_and_ergodic and state.iter > 0:
        if multi_primal_value(problem, x_erg) < multi_primal_value(problem, x_last):
            x_out, u_out = x_erg, u_erg
    return AtosResult(
        x=x_out,
        u=u_out,
        x_last=x_last,
        u_last=u_last,
        x_ergodic=x_erg,
        u_ergodic=u_erg,
        iterations=state.iter,
        converged=converged,
        trace=trace,
        downgraded_to_v1=downgraded,
        gamma0=gamma0,
        history=history,
    )
