"""Synthetic benchmark problem generators.

The design matrices follow a seeded first-order autoregressive recursion
across samples: ``a_1 = z_1``, ``a_i = z_i + corr * a_{i-1}`` with standard
Gaussian rows ``z_i``, which makes the problems increasingly ill-conditioned
as ``corr`` approaches one.  Randomness comes from numpy's seeded PCG64
generator; tests assert statistical properties and seed determinism only, so
the generator may be swapped.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import prox_ops
from .core import CompositeProblem
from .losses import Dataset, least_squares_oracle, logistic_oracle
from .product_space import MultiProxProblem, multi_primal_value
from .prox_ops import (
    GroupPartition,
    OverlapGroupSplit,
    doubly_stochastic_affine_penalty,
    group_lasso_penalty,
    l1_penalty,
    lipschitz_bound,
    nearly_isotonic_half_penalty,
    nonneg_penalty,
    tv2d_half_penalty,
    trace_norm_penalty,
    trend_filter_phase_penalty,
)

__all__ = [
    "PROBLEM_KINDS",
    "ProblemSpec",
    "gen_autoregressive_design",
    "gen_overlap_groups",
    "gen_group_sparse_truth",
    "box_blur_matrix",
    "build_problem",
    "calibrate_lambda",
]

PROBLEM_KINDS = (
    "overlap_group_lasso_logistic",
    "tv2d_least_squares",
    "trace_l1_least_squares",
    "nearly_isotonic_logistic",
    "trend_filter_least_squares",
    "doubly_stochastic_qp",
)


@dataclass
class ProblemSpec:
    """Serializable description of one synthetic benchmark instance."""

    kind: str
    n: Optional[int] = None
    p: Optional[int] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    lam: float = 0.1
    corr: float = 0.0
    seed: int = 0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(
                f"unknown problem kind {self.kind!r}; expected one of {PROBLEM_KINDS}"
            )
        if not 0.0 <= self.corr < 1.0:
            raise ValueError(f"corr must lie in [0, 1), got {self.corr}")
        for name in ("n", "p", "rows", "cols"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown problem spec fields: {sorted(extra)}")
        return cls(**data)


def gen_autoregressive_design(n: int, p: int, corr: float, seed: int) -> np.ndarray:
    """n x p design with AR(1)-correlated rows (see module docstring)."""
    if not 0.0 <= corr < 1.0:
        raise ValueError(f"corr must lie in [0, 1), got {corr}")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    if corr == 0.0:
        return Z
    A = np.empty_like(Z)
    A[0] = Z[0]
    for i in range(1, n):
        A[i] = Z[i] + corr * A[i - 1]
    return A


def gen_overlap_groups(p: int) -> OverlapGroupSplit:
    """Groups of 10 with stride 8 (overlap 2), split into two disjoint halves.

    Requires p = 8 G + 2 for some G >= 1, i.e. p congruent to 2 modulo 8.
    The first subfamily holds the even-indexed groups, the second the
    odd-indexed ones; within each subfamily groups are disjoint.
    """
    if p < 10 or (p - 2) % 8 != 0:
        raise ValueError(
            f"p={p} cannot be tiled by size-10 groups with stride 8; need p = 8G + 2"
        )
    n_groups = (p - 2) // 8
    groups = [np.arange(8 * i, 8 * i + 10) for i in range(n_groups)]
    even = GroupPartition(groups[0::2])
    odd = GroupPartition(groups[1::2]) if n_groups > 1 else GroupPartition([])
    return OverlapGroupSplit([even, odd])


def gen_group_sparse_truth(split: OverlapGroupSplit, seed: int,
                           n_active: int = 10) -> np.ndarray:
    """Ground truth that is constant on a few uniformly drawn groups.

    Draws ``n_active`` group indices with replacement and fills each drawn
    group with a single Gaussian value; everything else is zero.
    """
    groups = split.all_groups
    p = 1 + max(int(g.max()) for g in groups if g.size)
    rng = np.random.default_rng(seed)
    truth = np.zeros(p)
    chosen = rng.integers(0, len(groups), size=min(n_active, len(groups)))
    for i in chosen:
        truth[groups[i]] = rng.standard_normal()
    return truth


def box_blur_matrix(rows: int, cols: int) -> np.ndarray:
    """Dense matrix of the reflect-padded separable 3x3 box blur."""

    def blur_1d(m):
        B = np.zeros((m, m))
        for i in range(m):
            for d in (-1, 0, 1):
                j = i + d
                j = -j - 1 if j < 0 else (2 * m - 1 - j if j >= m else j)
                B[i, j] += 1.0 / 3.0
        return B

    return np.kron(blur_1d(rows), blur_1d(cols))


def _piecewise_constant_image(rows, cols, rng):
    X = np.zeros((rows, cols))
    for _ in range(4):
        r0, r1 = sorted(rng.integers(0, rows, 2).tolist())
        c0, c1 = sorted(rng.integers(0, cols, 2).tolist())
        X[r0:r1 + 1, c0:c1 + 1] += rng.standard_normal()
    return X


def _sign_labels(scores: np.ndarray, rng, flip_frac: float = 0.15) -> np.ndarray:
    # a fraction of labels is flipped so the data is never linearly
    # separable and the logistic problems have finite minimizers
    b = np.sign(scores)
    b[b == 0] = 1.0
    n_flip = int(np.ceil(flip_frac * b.size))
    if n_flip:
        b[rng.choice(b.size, size=n_flip, replace=False)] *= -1.0
    return b


def build_problem(spec: ProblemSpec):
    """Assemble the loss + penalty split for one problem kind.

    Returns ``(problem, meta)`` where ``problem`` is a
    :class:`CompositeProblem` (or a :class:`MultiProxProblem` for the
    trend-filtering split) and ``meta`` records the ground truth, the
    Lipschitz bound of the h term (when finite) and the smooth constant.
    """
    kind = spec.kind
    rng = np.random.default_rng(spec.seed ^ 0x5EED)
    if kind == "overlap_group_lasso_logistic":
        n, p = spec.n or 100, spec.p or 50
        split = gen_overlap_groups(p)
        truth = gen_group_sparse_truth(split, spec.seed)
        A = gen_autoregressive_design(n, p, spec.corr, spec.seed)
        b = _sign_labels(A @ truth + spec.noise_sd * rng.standard_normal(n), rng)
        f = logistic_oracle(Dataset(A, b))
        even, odd = split.subfamilies
        g = group_lasso_penalty(even, spec.lam, p)
        h = group_lasso_penalty(odd, spec.lam, p)
        problem = CompositeProblem(f=f, g=g, h=h, dim=p)
        beta_h = h.lipschitz_bound
        design, targets = A, b
    elif kind == "tv2d_least_squares":
        rows, cols = spec.rows or 8, spec.cols or 8
        p = rows * cols
        truth = _piecewise_constant_image(rows, cols, rng).ravel()
        B = box_blur_matrix(rows, cols)
        y = B @ truth + spec.noise_sd * rng.standard_normal(p)
        f = least_squares_oracle(Dataset(B, y))
        g = tv2d_half_penalty((rows, cols), spec.lam, axis=1)
        h = tv2d_half_penalty((rows, cols), spec.lam, axis=0)
        problem = CompositeProblem(f=f, g=g, h=h, dim=p)
        beta_h = h.lipschitz_bound
        design, targets = B, y
    elif kind == "trace_l1_least_squares":
        rows, cols = spec.rows or 6, spec.cols or 6
        p = rows * cols
        n = spec.n or 2 * p  # twice as many samples as features
        # rank-2 product of sparse factors: simultaneously sparse and low rank
        left = rng.standard_normal((2, rows)) * (rng.random((2, rows)) < 0.4)
        right = rng.standard_normal((2, cols)) * (rng.random((2, cols)) < 0.4)
        truth = (left.T @ right).ravel()
        A = gen_autoregressive_design(n, p, spec.corr, spec.seed)
        b = A @ truth + spec.noise_sd * rng.standard_normal(n)
        f = least_squares_oracle(Dataset(A, b), mean=True)
        g = trace_norm_penalty((rows, cols), spec.lam)
        h = l1_penalty(spec.lam, size=p)
        problem = CompositeProblem(f=f, g=g, h=h, dim=p)
        beta_h = h.lipschitz_bound
        design, targets = A, b
    elif kind == "nearly_isotonic_logistic":
        n, p = spec.n or 100, spec.p or 50
        truth = np.linspace(-2.0, 2.0, p) + 0.1 * rng.standard_normal(p)
        A = gen_autoregressive_design(n, p, spec.corr, spec.seed)
        b = _sign_labels(A @ truth + spec.noise_sd * rng.standard_normal(n), rng)
        f = logistic_oracle(Dataset(A, b))
        g = nearly_isotonic_half_penalty(spec.lam, offset=0, p=p)
        h = nearly_isotonic_half_penalty(spec.lam, offset=1, p=p)
        problem = CompositeProblem(f=f, g=g, h=h, dim=p)
        beta_h = h.lipschitz_bound
        design, targets = A, b
    elif kind == "trend_filter_least_squares":
        p = spec.p or 20
        knots = np.linspace(0, p - 1, 4)
        slopes = rng.standard_normal(3)
        t = np.arange(p, dtype=float)
        truth = np.piecewise(
            t,
            [t < knots[1], (t >= knots[1]) & (t < knots[2]), t >= knots[2]],
            [lambda s: slopes[0] * s,
             lambda s: slopes[0] * knots[1] + slopes[1] * (s - knots[1]),
             lambda s: slopes[0] * knots[1] + slopes[1] * (knots[2] - knots[1])
             + slopes[2] * (s - knots[2])],
        )
        b = truth + spec.noise_sd * rng.standard_normal(p)
        phi = least_squares_oracle(Dataset(np.eye(p), b))
        terms = [trend_filter_phase_penalty(p, phase, spec.lam) for phase in (0, 1, 2)]
        beta_h = max(term.lipschitz_bound for term in terms)
        problem = MultiProxProblem(phi=phi, terms=terms, beta_h=beta_h, dim=p)
        truth = truth.copy()
        design, targets = np.eye(p), b
    elif kind == "doubly_stochastic_qp":
        n = spec.n or 8
        perm = np.eye(n)[rng.permutation(n)]
        C = perm + spec.noise_sd * rng.standard_normal((n, n))
        c = C.ravel()
        from .core import SmoothOracle

        f = SmoothOracle(
            value_at=lambda x: float(np.dot(x - c, x - c)),
            gradient_at=lambda x: 2.0 * (x - c),
            lipschitz_estimate=2.0,
        )
        g = doubly_stochastic_affine_penalty(n)
        h = nonneg_penalty()
        problem = CompositeProblem(f=f, g=g, h=h, mu_f=2.0, dim=n * n)
        truth = perm.ravel()
        beta_h = None  # indicator term: not Lipschitz
        design, targets = C, c
    else:  # pragma: no cover - guarded by ProblemSpec
        raise ValueError(f"unknown problem kind {kind!r}")

    smooth = problem.phi if isinstance(problem, MultiProxProblem) else problem.f
    meta = {
        "kind": kind,
        "beta_h": beta_h,
        "x_truth": truth,
        "L_f": smooth.lipschitz_estimate,
        "multi": isinstance(problem, MultiProxProblem),
        "lam": spec.lam,
        "design": design,
        "targets": targets,
    }
    return problem, meta


def solution_sparsity(x: np.ndarray, rel_tol: float = 1e-8) -> float:
    """Fraction of coefficients that are zero up to a relative threshold."""
    x = np.asarray(x)
    thresh = rel_tol * max(1.0, float(np.max(np.abs(x), initial=0.0)))
    return float(np.mean(np.abs(x) <= thresh))


def calibrate_lambda(spec: ProblemSpec, target_lo: float, target_hi: float,
                     lam_hi: Optional[float] = None, max_bisect: int = 40,
                     solve_tol: float = 1e-9, max_iter: int = 20_000) -> float:
    """Bisect the regularization weight until the solution sparsity lands in
    ``[target_lo, target_hi]`` (fractions of zero coefficients).

    Sparsity is monotone in the weight, so plain bisection on lambda works;
    the solves run the adaptive solver at moderate tolerance.
    """
    from .atos import AtosConfig, solve as atos_solve
    from .product_space import multi_solve

    if not 0.0 <= target_lo < target_hi <= 1.0:
        raise ValueError("need 0 <= target_lo < target_hi <= 1")

    def sparsity_at(lam):
        trial = dataclasses.replace(spec, lam=lam)
        problem, meta = build_problem(trial)
        config = AtosConfig(variant="v2", beta_h=meta["beta_h"], tol=solve_tol,
                            max_iter=max_iter)
        if meta["multi"]:
            res = multi_solve(problem, np.zeros(problem.dim), config=config)
        else:
            res = atos_solve(problem, np.zeros(problem.dim), config=config)
        return solution_sparsity(res.x_last)

    lo = 0.0
    hi = lam_hi if lam_hi is not None else max(spec.lam, 1e-3)
    # grow the bracket until the upper end over-sparsifies
    for _ in range(60):
        if sparsity_at(hi) >= target_hi:
            break
        hi *= 2.0
    else:
        raise ValueError("could not bracket the requested sparsity range")
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        frac = sparsity_at(mid)
        if frac < target_lo:
            lo = mid
        elif frac > target_hi:
            hi = mid
        else:
            return mid
    raise ValueError(
        f"bisection failed to land in [{target_lo}, {target_hi}] for {spec.kind}"
    )
