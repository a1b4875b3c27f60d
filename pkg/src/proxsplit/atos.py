"""Adaptive-step three-operator splitting solver.

Each iteration takes a forward-backward step through g at a candidate step
size, accepts the step once a sufficient-decrease test against a quadratic
tangent model of f passes (shrinking the step by tau otherwise), then takes
the backward step through h and updates the dual variable.  Two step
policies are supported: "v1" keeps the accepted step for the next iteration
(nonincreasing steps), "v2" additionally lets the step grow by an amount
controlled by the line-search surplus and a Lipschitz bound on h.

The smooth value and gradient at z are evaluated once per iteration; each
line-search candidate costs one extra evaluation of f.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    CompositeProblem,
    NonconvergenceError,
    SmoothOracle,
    SolverState,
    TraceRecord,
    primal_value,
    quadratic_model,
    saddle_value,
)

__all__ = [
    "AtosConfig",
    "AtosResult",
    "estimate_gamma0",
    "grow_step",
    "atos_step",
    "solve",
    "ergodic_bound_check",
]

# relative slack absorbing rounding in the sufficient-decrease comparison
DECREASE_SLACK = 1e-12


@dataclass
class AtosConfig:
    """Solver options.

    ``variant`` is "v1" (nonincreasing steps) or "v2" (growing steps; needs
    ``beta_h``, a Lipschitz bound on h).  ``gamma0`` is the initial step
    size; when absent it is estimated from f at the starting point.  The
    growth of "v2" is capped at a factor ``2**growth_cap_exponent`` per
    iteration (doubling every 20 iterations at the default 0.05).
    """

    variant: str = "v2"
    tau: float = 0.7
    gamma0: Optional[float] = None
    beta_h: Optional[float] = None
    max_iter: int = 1000
    tol: float = 1e-10
    max_backtracks: int = 100
    growth_cap_exponent: float = 0.05
    report_best_of_last_and_ergodic: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        if self.variant not in ("v1", "v2"):
            raise ValueError(f"variant must be 'v1' or 'v2', got {self.variant!r}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")

    @property
    def grows(self) -> bool:
        return self.variant == "v2" and self.beta_h is not None


@dataclass
class AtosResult:
    """Solver output.

    ``x``/``u`` is the reported pair: the last iterate or the step-weighted
    ergodic average, whichever has the smaller primal value (when the config
    asks for that comparison).  ``history`` holds (x, u, gamma) per iteration
    when ``keep_iterates`` was set.
    """

    x: np.ndarray
    u: np.ndarray
    x_last: np.ndarray
    u_last: np.ndarray
    x_ergodic: np.ndarray
    u_ergodic: np.ndarray
    iterations: int
    converged: bool
    trace: List[TraceRecord]
    downgraded_to_v1: bool = False
    gamma0: float = 0.0
    history: Optional[List[Tuple[np.ndarray, np.ndarray, float]]] = None


def _estimate_gamma0(f: SmoothOracle, z0: np.ndarray):
    """Initial step estimate; returns (gamma0, n_func, n_grad)."""
    z0 = np.asarray(z0, dtype=float)
    fz = float(f.value_at(z0))
    grad = f.gradient_at(z0)
    n_func, n_grad = 1, 1
    gnorm2 = float(np.dot(grad, grad))
    if gnorm2 == 0.0:
        # z0 is stationary for f; any positive step works
        return 1.0, n_func, n_grad
    eps = 1e-3
    for _ in range(60):
        f_trial = float(f.value_at(z0 - eps * grad))
        n_func += 1
        if f_trial <= fz:
            # solve f(trial) = Q_0(trial, gamma) for gamma and double it;
            # the denominator is half the curvature along the ray and
            # vanishes only when f is linear there (then any step works,
            # so return the trial step scaled by 4)
            denom = f_trial - fz + eps * gnorm2
            if denom <= 0.0:
                return 4.0 * eps, n_func, n_grad
            return eps * eps * gnorm2 / denom, n_func, n_grad
        eps /= 10.0
    return 1.0, n_func, n_grad


def estimate_gamma0(f: SmoothOracle, z0: np.ndarray) -> float:
    """Estimate an initial step size from a tiny trial gradient step.

    Starting from eps = 1e-3, the trial point z0 - eps * grad is shrunk by
    factors of 10 until f decreases.  The tangent quadratic model at z0 with
    curvature 1/gamma is then made tight at the trial point by solving
    ``f(trial) = Q_0(trial, gamma)`` for gamma, and the estimate is twice
    that value: ``eps^2 ||grad||^2 / (f(trial) - f(z0) + eps ||grad||^2)``.
    For an L-smooth quadratic this evaluates to 2 / L exactly.  Returns
    ``4 eps`` when f is linear along the ray and 1.0 when the gradient
    vanishes at z0.
    """
    gamma, _, _ = _estimate_gamma0(f, z0)
    return gamma


def grow_step(gamma_t: float, delta_t: float, beta_h: float,
              cap_exponent: float = 0.05) -> float:
    """Largest admissible next step: min of the growth cap and the surplus rule.

    The surplus rule allows ``sqrt(gamma^2 + gamma * delta / (2 beta_h)^2)``;
    the cap limits growth to a factor ``2**cap_exponent`` per iteration.
    """
    if beta_h <= 0:
        raise ValueError(f"beta_h must be positive, got {beta_h}")
    if delta_t < 0:
        raise ValueError(f"delta_t must be nonnegative, got {delta_t}")
    if delta_t == 0.0:
        return gamma_t
    upper = math.sqrt(gamma_t * gamma_t + gamma_t * delta_t / (4.0 * beta_h * beta_h))
    return min(gamma_t * 2.0 ** cap_exponent, upper)


def atos_step(problem: CompositeProblem, state: SolverState,
              config: AtosConfig) -> SolverState:
    """Run one outer iteration in place and return the state.

    Raises :class:`NonconvergenceError` when the line search exceeds
    ``config.max_backtracks`` rejections.
    """
    f, g, h = problem.f, problem.g, problem.h
    z, u = state.z, state.u
    gamma = state.gamma
    fz = float(f.value_at(z))
    grad = f.gradient_at(z)
    state.n_func += 1
    state.n_grad += 1
    backtracks = 0
    while True:
        x = g.prox_at(z - gamma * (u + grad), gamma)
        state.n_prox += 1
        fx = float(f.value_at(x))
        state.n_func += 1
        model = quadratic_model(fz, grad, z, x, gamma)
        if fx <= model + abs(fz) * DECREASE_SLACK:
            break
        backtracks += 1
        if backtracks > config.max_backtracks:
            raise NonconvergenceError(
                f"line search exceeded {config.max_backtracks} backtracks "
                f"at iteration {state.iter}"
            )
        gamma *= config.tau
    z_next = h.prox_at(x + gamma * u, gamma)
    state.n_prox += 1
    u_next = u + (x - z_next) / gamma

    state.ergodic_x_sum += gamma * x
    state.ergodic_u_sum += gamma * u_next
    state.s += gamma

    delta = max(model - fx, 0.0)
    state.gamma_prev = gamma
    state.delta_prev = delta
    state.gamma = (
        grow_step(gamma, delta, config.beta_h, config.growth_cap_exponent)
        if config.grows else gamma
    )
    state.z = z_next
    state.u = u_next
    state.x = x
    state.iter += 1
    state.backtracks_last = backtracks
    return state


def solve(problem: CompositeProblem, z0, u0=None,
          config: Optional[AtosConfig] = None) -> AtosResult:
    """Iterate until the fixed-point residual drops below ``config.tol``.

    Both primal and dual starting points default to zero.  The residual is
    the scaled displacement of the accepted step, which coincides with the
    fixed-point residual of the splitting map at the accepted step size.
    """
    config = config or AtosConfig()
    z0 = np.asarray(z0, dtype=float)
    u0 = np.zeros_like(z0) if u0 is None else np.asarray(u0, dtype=float)
    problem.check_dim(z0)
    if z0.shape != u0.shape:
        raise ValueError("z0 and u0 must have the same shape")

    downgraded = config.variant == "v2" and config.beta_h is None
    state = SolverState.initial(z0, u0, 1.0)
    if config.gamma0 is not None:
        gamma0 = float(config.gamma0)
    else:
        gamma0, nf, ng = _estimate_gamma0(problem.f, z0)
        state.n_func += nf
        state.n_grad += ng
    state.gamma = state.gamma_prev = gamma0

    trace: List[TraceRecord] = []
    history = [] if config.keep_iterates else None
    t0 = time.perf_counter_ns()
    converged = math.isinf(config.tol) and config.tol > 0
    if not converged:
        for _ in range(config.max_iter):
            z_prev, u_prev = state.z, state.u
            atos_step(problem, state, config)
            gamma_acc = state.gamma_prev
            dz = state.z - z_prev
            du = state.u - u_prev
            residual = math.sqrt(
                float(np.dot(dz, dz)) + gamma_acc ** 2 * float(np.dot(du, du))
            ) / max(1.0, float(np.linalg.norm(z_prev)))
            trace.append(TraceRecord(
                iter=state.iter,
                wall_ns=time.perf_counter_ns() - t0,
                step_size=gamma_acc,
                n_grad=state.n_grad,
                n_func=state.n_func,
                n_prox=state.n_prox,
                primal=primal_value(problem, state.x),
                residual=residual,
            ))
            if history is not None:
                history.append((state.x, state.u, gamma_acc))
            if residual <= config.tol:
                converged = True
                break

    if state.s > 0.0:
        x_erg = state.ergodic_x_sum / state.s
        u_erg = state.ergodic_u_sum / state.s
    else:
        x_erg, u_erg = z0.copy(), u0.copy()
    x_last = state.x if state.iter > 0 else z0.copy()
    u_last = state.u if state.iter > 0 else u0.copy()
    x_out, u_out = x_last, u_last
    if config.report_best_of_last_and_ergodic and state.iter > 0:
        if primal_value(problem, x_erg) < primal_value(problem, x_last):
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


def ergodic_bound_check(problem: CompositeProblem,
                        trace_states: Sequence[Tuple[np.ndarray, np.ndarray, float]],
                        x_ref: np.ndarray, u_ref: np.ndarray,
                        z0: np.ndarray, u0: np.ndarray, gamma0: float,
                        slack: float = 1e-9) -> bool:
    """Check the saddle-gap bound of the step-weighted averages at every step.

    ``trace_states`` holds per-iteration triples (x, u, gamma) as produced by
    :func:`solve` with ``keep_iterates``.  At each prefix the gap of the
    weighted averages against the fixed reference pair must not exceed
    ``(||z0 - x_ref||^2 + gamma0^2 ||u0 - u_ref||^2) / (2 s)`` where s is the
    running sum of step sizes; ``slack`` absorbs rounding.  Requires a
    closed-form conjugate on h.
    """
    if problem.h.conjugate_value_at is None:
        raise ValueError("ergodic_bound_check needs a closed-form conjugate for h")
    z0 = np.asarray(z0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    const = float(np.dot(z0 - x_ref, z0 - x_ref)) \
        + gamma0 ** 2 * float(np.dot(u0 - u_ref, u0 - u_ref))
    x_sum = np.zeros_like(z0)
    u_sum = np.zeros_like(u0)
    s = 0.0
    for x_i, u_i, gamma_i in trace_states:
        s += gamma_i
        x_sum = x_sum + gamma_i * x_i
        u_sum = u_sum + gamma_i * u_i
        gap = saddle_value(problem, x_sum / s, u_ref) \
            - saddle_value(problem, x_ref, u_sum / s)
        if gap > const / (2.0 * s) + slack:
            return False
    return True
