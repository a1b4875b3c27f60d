"""proxsplit: adaptive three-operator splitting, a proximal operator catalog
and a reproducible benchmark harness."""

__version__ = "0.1.0"

from .core import (
    CompositeProblem,
    NonconvergenceError,
    ProxOperator,
    SmoothOracle,
    SolverState,
    TraceRecord,
    fixed_point_map,
    fixed_point_residual,
    primal_value,
    quadratic_model,
    saddle_value,
    zero_penalty,
)
from .atos import AtosConfig, AtosResult, atos_step, ergodic_bound_check, estimate_gamma0, grow_step, solve
from .product_space import MultiProxProblem, ProductState, multi_primal_value, multi_quadratic_model, multi_solve
from .baselines import BaselineResult, PdhgConfig, pdhg_solve, tos_fixed_solve
from .losses import Dataset, least_squares_oracle, logistic_oracle

__all__ = [
    "__version__",
    "CompositeProblem", "NonconvergenceError", "ProxOperator", "SmoothOracle",
    "SolverState", "TraceRecord", "fixed_point_map", "fixed_point_residual",
    "primal_value", "quadratic_model", "saddle_value", "zero_penalty",
    "AtosConfig", "AtosResult", "atos_step", "ergodic_bound_check",
    "estimate_gamma0", "grow_step", "solve",
    "MultiProxProblem", "ProductState", "multi_primal_value",
    "multi_quadratic_model", "multi_solve",
    "BaselineResult", "PdhgConfig", "pdhg_solve", "tos_fixed_solve",
    "Dataset", "least_squares_oracle", "logistic_oracle",
]
