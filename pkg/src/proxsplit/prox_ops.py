"""Closed-form proximal operators, projections and penalty factories.

Every operator here evaluates ``argmin_z phi(z) + ||z - x||^2 / (2 gamma)``
exactly (up to floating point) for its penalty phi.  Projections are
gamma-independent and idempotent.  The ``*_penalty`` factories wrap the raw
operators into :class:`~proxsplit.core.ProxOperator` instances, flattening
matrix-shaped unknowns row-major.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ProxOperator

__all__ = [
    "GroupPartition",
    "OverlapGroupSplit",
    "soft_threshold",
    "group_soft_threshold",
    "fused_lasso_prox",
    "tv2d_row_prox",
    "tv2d_col_prox",
    "isotonic_block_project",
    "nearly_isotonic_pair_prox",
    "nearly_isotonic_block_prox",
    "doubly_stochastic_affine_project",
    "nonneg_project",
    "trace_norm_prox",
    "trend_filter_matrix",
    "trend_filter_block_prox",
    "lipschitz_bound",
    "l1_penalty",
    "group_lasso_penalty",
    "tv2d_half_penalty",
    "isotonic_half_penalty",
    "nearly_isotonic_half_penalty",
    "doubly_stochastic_affine_penalty",
    "nonneg_penalty",
    "trace_norm_penalty",
    "trend_filter_phase_penalty",
    "squared_l2_penalty",
]


@dataclass(frozen=True)
class GroupPartition:
    """A family of pairwise-disjoint index groups into {0..p-1}."""

    groups: tuple

    def __init__(self, groups: Sequence[Sequence[int]]):
        arrays = tuple(np.asarray(g, dtype=np.intp) for g in groups)
        seen = set()
        for g in arrays:
            if g.size and g.min() < 0:
                raise ValueError("group indices must be nonnegative")
            idx = set(int(i) for i in g)
            if len(idx) != g.size or idx & seen:
                raise ValueError("groups must be pairwise disjoint")
            seen |= idx
        object.__setattr__(self, "groups", arrays)

    def covered(self, p: int) -> np.ndarray:
        mask = np.zeros(p, dtype=bool)
        for g in self.groups:
            if g.size and g.max() >= p:
                raise ValueError("group index out of range")
            mask[g] = True
        return mask


@dataclass(frozen=True)
class OverlapGroupSplit:
    """Disjoint subfamilies whose union may overlap across subfamilies."""

    subfamilies: tuple

    def __init__(self, subfamilies: Sequence[GroupPartition]):
        object.__setattr__(self, "subfamilies", tuple(subfamilies))

    @property
    def all_groups(self):
        return [g for fam in self.subfamilies for g in fam.groups]


def soft_threshold(x, gamma):
    """Componentwise shrinkage: the prox of gamma * ||.||_1."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def group_soft_threshold(x, partition: GroupPartition, gamma):
    """Blockwise shrinkage: the prox of gamma * sum of group l2 norms.

    A group with norm <= gamma (including zero norm) is set to zero;
    coordinates outside every group pass through unchanged.
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    for g in partition.groups:
        nrm = float(np.linalg.norm(x[g]))
        scale = max(0.0, 1.0 - gamma / nrm) if nrm > 0.0 else 0.0
        out[g] = scale * x[g]
    return out


def fused_lasso_prox(x, gamma):
    """Exact prox of gamma * sum |z_{i+1} - z_i| by a direct linear-time scan.

    Implements Condat's taut-string-style algorithm: the current segment is
    extended sample by sample while the running bounds allow it, and is
    flushed at the current lower/upper level when a jump becomes necessary.
    """
    y = np.asarray(x, dtype=float)
    n = y.size
    if n == 0:
        return y.copy()
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if n == 1:
        return y.copy()
    lam = float(gamma)
    out = np.empty(n)
    k = k0 = km = kp = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        if k == n - 1:
            if umin < 0.0:
                # the lower level cannot hold to the end: flush it
                out[k0:km + 1] = vmin
                km += 1
                k = k0 = km
                vmin = y[k]
                umin = lam
                umax = y[k] + lam - vmax
            elif umax > 0.0:
                out[k0:kp + 1] = vmax
                kp += 1
                k = k0 = kp
                vmax = y[k]
                umax = -lam
                umin = y[k] - lam - vmin
            else:
                out[k0:n] = vmin + umin / (k - k0 + 1)
                return out
            continue
        if y[k + 1] + umin < vmin - lam:
            # a negative jump is necessary
            out[k0:km + 1] = vmin
            km += 1
            k = k0 = kp = km
            vmin = y[k]
            vmax = y[k] + 2.0 * lam
            umin = lam
            umax = -lam
        elif y[k + 1] + umax > vmax + lam:
            # a positive jump is necessary
            out[k0:kp + 1] = vmax
            kp += 1
            k = k0 = km = kp
            vmin = y[k] - 2.0 * lam
            vmax = y[k]
            umin = lam
            umax = -lam
        else:
            # no jump: extend the segment and recenter the bounds if needed
            k += 1
            umin += y[k] - vmin
            umax += y[k] - vmax
            if umin >= lam:
                vmin += (umin - lam) / (k - k0 + 1)
                umin = lam
                km = k
            if umax <= -lam:
                vmax += (umax + lam) / (k - k0 + 1)
                umax = -lam
                kp = k


def tv2d_row_prox(X, gamma):
    """Apply the fused lasso prox independently to each row."""
    X = np.asarray(X, dtype=float)
    return np.vstack([fused_lasso_prox(row, gamma) for row in X])


def tv2d_col_prox(X, gamma):
    """Apply the fused lasso prox independently to each column."""
    X = np.asarray(X, dtype=float)
    return tv2d_row_prox(X.T, gamma).T


def _pair_starts(p: int, offset: int) -> np.ndarray:
    if offset not in (0, 1):
        raise ValueError("offset must be 0 or 1")
    return np.arange(offset, p - 1, 2)


def isotonic_block_project(x, offset):
    """Project onto pairwise order constraints a <= b on disjoint pairs.

    ``offset=0`` constrains pairs (0,1),(2,3),...; ``offset=1`` the pairs
    (1,2),(3,4),....  Violating pairs are replaced by their average; any
    unpaired coordinates pass through unchanged.
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    idx = _pair_starts(x.size, offset)
    a, b = out[idx], out[idx + 1]
    bad = a > b
    mean = 0.5 * (a[bad] + b[bad])
    out[idx[bad]] = mean
    out[idx[bad] + 1] = mean
    return out


def nearly_isotonic_pair_prox(a, b, gamma):
    """Prox of gamma * max(a - b, 0) for a single pair."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if a <= b:
        return a, b
    if a - gamma >= b + gamma:
        return a - gamma, b + gamma
    m = 0.5 * (a + b)
    return m, m


def nearly_isotonic_block_prox(x, gamma, offset):
    """Blockwise prox of gamma * sum max(a - b, 0) over disjoint pairs."""
    x = np.asarray(x, dtype=float)
    out = x.copy()
    idx = _pair_starts(x.size, offset)
    a, b = out[idx], out[idx + 1]
    spread = (a - b > 0) & (a - gamma >= b + gamma)
    merge = (a - b > 0) & ~spread
    out[idx[spread]] = a[spread] - gamma
    out[idx[spread] + 1] = b[spread] + gamma
    mean = 0.5 * (a[merge] + b[merge])
    out[idx[merge]] = mean
    out[idx[merge] + 1] = mean
    return out


def doubly_stochastic_affine_project(X):
    """Orthogonal projection onto {Z : Z 1 = 1, Z^T 1 = 1} (closed form)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    n = X.shape[0]
    row_sums = X.sum(axis=1)
    col_sums = X.sum(axis=0)
    total = float(X.sum())
    shift = (1.0 / n + total / n ** 2) - row_sums / n
    return X + shift[:, None] - (col_sums / n)[None, :]


def nonneg_project(X):
    """Componentwise projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(X, dtype=float), 0.0)


def trace_norm_prox(X, gamma):
    """Prox of gamma * (sum of singular values): soft-threshold the spectrum."""
    X = np.asarray(X, dtype=float)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise np.linalg.LinAlgError(f"SVD failed in trace_norm_prox: {exc}")
    return (U * np.maximum(s - gamma, 0.0)) @ Vt


def _trend_filter_rows(p: int, phase: int) -> np.ndarray:
    if phase not in (0, 1, 2):
        raise ValueError("phase must be 0, 1 or 2")
    return np.arange(phase, max(p - 2, 0), 3)


def trend_filter_matrix(p: int, phase: int) -> np.ndarray:
    """Dense second-difference matrix with non-overlapping rows (stride 3).

    Row j applies the stencil (1, -2, 1) starting at index phase + 3 j; the
    rows have disjoint support, so L L^T = 6 I exactly.
    """
    starts = _trend_filter_rows(p, phase)
    L = np.zeros((starts.size, p))
    for r, s in enumerate(starts):
        L[r, s] = 1.0
        L[r, s + 1] = -2.0
        L[r, s + 2] = 1.0
    return L


def trend_filter_block_prox(x, gamma, phase):
    """Prox of gamma * ||L z||_1 for the phase-shifted second-difference L.

    Because L is semi-orthogonal (L L^T = 6 I), the prox is available in
    closed form from the l1 prox of the transformed point.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    x = np.asarray(x, dtype=float)
    starts = _trend_filter_rows(x.size, phase)
    if starts.size == 0:
        return x.copy()
    nu = 6.0
    w = x[starts] - 2.0 * x[starts + 1] + x[starts + 2]
    corr = (soft_threshold(w, nu * gamma) - w) / nu
    out = x.copy()
    out[starts] += corr
    out[starts + 1] -= 2.0 * corr
    out[starts + 2] += corr
    return out


def lipschitz_bound(penalty_kind: str, **params) -> float:
    """Global Lipschitz constants of the catalog penalties.

    Supported kinds: ``group_lasso`` (lam, n_groups), ``tv2d_half``
    (lam, rows, cols), ``l1`` (lam, size), ``nearly_isotonic`` (lam, p).
    """
    lam = float(params["lam"])
    if penalty_kind == "group_lasso":
        return lam * np.sqrt(params["n_groups"])
    if penalty_kind == "tv2d_half":
        return 2.0 * lam * np.sqrt(params["rows"] * params["cols"])
    if penalty_kind == "l1":
        return lam * np.sqrt(params["size"])
    if penalty_kind == "nearly_isotonic":
        return 2.0 * lam * np.sqrt(params["p"])
    raise ValueError(f"unknown penalty kind: {penalty_kind!r}")


# ---------------------------------------------------------------------------
# ProxOperator factories
# ---------------------------------------------------------------------------

def l1_penalty(lam: float, size: Optional[int] = None) -> ProxOperator:
    """lam * ||.||_1 with its conjugate (l-inf ball indicator)."""

    def conj(u):
        return 0.0 if np.max(np.abs(u), initial=0.0) <= lam * (1 + 1e-12) + 1e-15 else np.inf

    return ProxOperator(
        prox_at=lambda x, gamma: soft_threshold(x, gamma * lam),
        value_at=lambda x: lam * float(np.sum(np.abs(x))),
        lipschitz_bound=lipschitz_bound("l1", lam=lam, size=size) if size else None,
        conjugate_value_at=conj,
    )


def group_lasso_penalty(partition: GroupPartition, lam: float,
                        p: Optional[int] = None) -> ProxOperator:
    """lam * sum of group l2 norms over a disjoint partition."""
    covered = partition.covered(p) if p is not None else None

    def value(x):
        return lam * float(sum(np.linalg.norm(x[g]) for g in partition.groups))

    def conj(u):
        tol = lam * 1e-12 + 1e-15
        for g in partition.groups:
            if np.linalg.norm(u[g]) > lam + tol:
                return np.inf
        if covered is not None and np.max(np.abs(u[~covered]), initial=0.0) > 1e-12:
            return np.inf
        return 0.0

    return ProxOperator(
        prox_at=lambda x, gamma: group_soft_threshold(x, partition, gamma * lam),
        value_at=value,
        lipschitz_bound=lipschitz_bound("group_lasso", lam=lam,
                                        n_groups=len(partition.groups)),
        conjugate_value_at=conj,
    )


def tv2d_half_penalty(shape, lam: float, axis: int) -> ProxOperator:
    """One half of the anisotropic 2-D total variation on a flattened matrix.

    ``axis=1`` penalizes differences along each row (prox applied row-wise),
    ``axis=0`` differences along each column.
    """
    rows, cols = shape
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    prox2d = tv2d_row_prox if axis == 1 else tv2d_col_prox

    def prox(x, gamma):
        return prox2d(x.reshape(rows, cols), gamma * lam).ravel()

    def value(x):
        X = x.reshape(rows, cols)
        return lam * float(np.sum(np.abs(np.diff(X, axis=axis))))

    return ProxOperator(
        prox_at=prox,
        value_at=value,
        lipschitz_bound=lipschitz_bound("tv2d_half", lam=lam, rows=rows, cols=cols),
    )


def isotonic_half_penalty(offset: int) -> ProxOperator:
    """Indicator of pairwise order constraints on even- or odd-start pairs."""

    def value(x):
        idx = _pair_starts(np.asarray(x).size, offset)
        ok = np.all(x[idx] <= x[idx + 1] + 1e-12)
        return 0.0 if ok else np.inf

    return ProxOperator(
        prox_at=lambda x, gamma: isotonic_block_project(x, offset),
        value_at=value,
        is_indicator=True,
    )


def nearly_isotonic_half_penalty(lam: float, offset: int,
                                 p: Optional[int] = None) -> ProxOperator:
    """lam * sum max(a - b, 0) over even- or odd-start pairs."""

    def value(x):
        idx = _pair_starts(np.asarray(x).size, offset)
        return lam * float(np.sum(np.maximum(x[idx] - x[idx + 1], 0.0)))

    return ProxOperator(
        prox_at=lambda x, gamma: nearly_isotonic_block_prox(x, gamma * lam, offset),
        value_at=value,
        lipschitz_bound=lipschitz_bound("nearly_isotonic", lam=lam, p=p) if p else None,
    )


def doubly_stochastic_affine_penalty(n: int, tol: float = 1e-8) -> ProxOperator:
    """Indicator of {X : X 1 = 1, X^T 1 = 1} on a flattened n x n matrix."""

    def value(x):
        X = x.reshape(n, n)
        ok = (np.max(np.abs(X.sum(axis=1) - 1.0)) <= tol
              and np.max(np.abs(X.sum(axis=0) - 1.0)) <= tol)
        return 0.0 if ok else np.inf

    return ProxOperator(
        prox_at=lambda x, gamma: doubly_stochastic_affine_project(x.reshape(n, n)).ravel(),
        value_at=value,
        is_indicator=True,
    )


def nonneg_penalty(tol: float = 1e-12) -> ProxOperator:
    """Indicator of the nonnegative orthant."""
    return ProxOperator(
        prox_at=lambda x, gamma: nonneg_project(x),
        value_at=lambda x: 0.0 if np.min(x, initial=0.0) >= -tol else np.inf,
        is_indicator=True,
    )


def trace_norm_penalty(shape, lam: float) -> ProxOperator:
    """lam * nuclear norm of a flattened matrix."""
    rows, cols = shape

    def value(x):
        return lam * float(np.sum(np.linalg.svd(x.reshape(rows, cols), compute_uv=False)))

    return ProxOperator(
        prox_at=lambda x, gamma: trace_norm_prox(x.reshape(rows, cols), gamma * lam).ravel(),
        value_at=value,
    )


def trend_filter_phase_penalty(p: int, phase: int, lam: float) -> ProxOperator:
    """lam * ||L z||_1 for one phase of the second-difference split."""
    n_rows = _trend_filter_rows(p, phase).size

    def value(x):
        starts = _trend_filter_rows(np.asarray(x).size, phase)
        w = x[starts] - 2.0 * x[starts + 1] + x[starts + 2]
        return lam * float(np.sum(np.abs(w)))

    return ProxOperator(
        prox_at=lambda x, gamma: trend_filter_block_prox(x, gamma * lam, phase),
        value_at=value,
        # ||L z||_1 <= sqrt(n_rows) ||L z|| <= sqrt(6 n_rows) ||z||
        lipschitz_bound=lam * float(np.sqrt(6.0 * n_rows)),
    )


def squared_l2_penalty(lam: float) -> ProxOperator:
    """(lam / 2) * ||.||^2; smooth, with conjugate ||u||^2 / (2 lam)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return ProxOperator(
        prox_at=lambda x, gamma: x / (1.0 + gamma * lam),
        value_at=lambda x: 0.5 * lam * float(np.dot(x, x)),
        conjugate_value_at=lambda u: float(np.dot(u, u)) / (2.0 * lam),
    )
