"""Benchmark runner: solver matrices, delimited traces and run manifests.

Every run starts each solver from (z0, u0) = (0, 0) on the same problem
instance, records one CSV of per-iteration trace rows per solver and a JSON
manifest describing the run.  After all solvers finish, the best primal
value seen anywhere is used to back-fill the ``subopt`` column.

Float cells are written with ``repr`` (shortest round-trip), so a repeated
run produces byte-identical CSV bodies apart from the wall_ns column, which
is wall-clock time and excluded from determinism comparisons
(:func:`csv_body_without_wall`).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .atos import AtosConfig, solve as atos_solve
from .baselines import PdhgConfig, pdhg_solve, tos_fixed_solve
from .core import TraceRecord
from .problems import ProblemSpec, build_problem
from .product_space import multi_solve

__all__ = [
    "SOLVER_NAMES",
    "BenchBudget",
    "BenchRun",
    "run_solver",
    "run_benchmark",
    "write_trace_csv",
    "read_trace_csv",
    "csv_body_without_wall",
]

SOLVER_NAMES = ("atos-v1", "atos-v2", "tos-fixed", "pdhg")

CSV_COLUMNS = ("iter", "wall_ns", "step_size", "n_grad", "n_func", "n_prox",
               "primal", "residual", "subopt")


@dataclass(frozen=True)
class BenchBudget:
    """Per-solver budget.  ``max_seconds`` is best effort: when set, a solver
    is cut off after the first iteration past the limit, which makes the
    trace length timing-dependent (documented; off by default)."""

    max_iter: int = 1000
    tol: float = 1e-10
    max_seconds: Optional[float] = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(path, rows: Sequence[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([
                r.iter, r.wall_ns, _fmt(r.step_size), r.n_grad, r.n_func,
                r.n_prox, _fmt(r.primal), _fmt(r.residual), _fmt(r.subopt),
            ])


def read_trace_csv(path) -> List[TraceRecord]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(TraceRecord(
                iter=int(rec["iter"]),
                wall_ns=int(rec["wall_ns"]),
                step_size=float(rec["step_size"]),
                n_grad=int(rec["n_grad"]),
                n_func=int(rec["n_func"]),
                n_prox=int(rec["n_prox"]),
                primal=float(rec["primal"]),
                residual=float(rec["residual"]),
                subopt=float(rec["subopt"]) if rec["subopt"] else None,
            ))
    return rows


def csv_body_without_wall(path) -> bytes:
    """CSV bytes with the wall_ns column removed (timestamps excluded from
    determinism comparisons)."""
    out = io.StringIO()
    writer = csv.writer(out)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            writer.writerow([c for i, c in enumerate(row) if i != 1])
    return out.getvalue().encode()


def run_solver(problem, meta: Dict, solver: Dict, budget: BenchBudget):
    """Run one named solver on a built problem; returns (trace, info).

    ``solver`` is a dict with a ``name`` from :data:`SOLVER_NAMES` plus
    optional overrides: ``gamma_scale`` for tos-fixed (step = scale / L_f),
    ``beta`` for pdhg, ``gamma0``/``tau`` for the adaptive variants.
    """
    name = solver.get("name")
    if name not in SOLVER_NAMES:
        raise ValueError(f"unknown solver {name!r}; expected one of {SOLVER_NAMES}")
    dim = problem.dim
    if dim is None:
        raise ValueError("benchmark problems must carry their dimension")
    z0 = np.zeros(dim)
    info: Dict = {"name": name}
    if name in ("atos-v1", "atos-v2"):
        config = AtosConfig(
            variant="v1" if name == "atos-v1" else "v2",
            tau=solver.get("tau", 0.7),
            gamma0=solver.get("gamma0"),
            beta_h=solver.get("beta_h", meta.get("beta_h")),
            max_iter=budget.max_iter,
            tol=budget.tol,
        )
        if meta.get("multi"):
            result = multi_solve(problem, z0, config=config)
        else:
            result = atos_solve(problem, z0, config=config)
        info["converged"] = result.converged
        info["downgraded_to_v1"] = result.downgraded_to_v1
        return result.trace, info
    if meta.get("multi"):
        raise ValueError(f"solver {name!r} does not support multi-term problems")
    L = meta.get("L_f")
    if L is None or L <= 0:
        raise ValueError(f"solver {name!r} needs a Lipschitz estimate for f")
    if name == "tos-fixed":
        gamma = solver.get("gamma_scale", 1.0) / L
        result = tos_fixed_solve(problem, z0, gamma,
                                 max_iter=budget.max_iter, tol=budget.tol)
    else:
        config = PdhgConfig(L_f=L, beta=solver.get("beta", 0.5),
                            max_iter=budget.max_iter, tol=budget.tol)
        result = pdhg_solve(problem, z0, config=config)
    info["converged"] = result.converged
    return result.trace, info


@dataclass
class BenchRun:
    """In-memory run artifact: manifest dict plus one trace per solver."""

    manifest: Dict
    traces: Dict[str, List[TraceRecord]]

    def save(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for solver_id, rows in self.traces.items():
            write_trace_csv(out_dir / f"{solver_id}.csv", rows)
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, run_dir) -> "BenchRun":
        run_dir = Path(run_dir)
        manifest_path = run_dir / "manifest.json"
        if not manifest_path.exists():
            raise ValueError(f"no manifest.json in {run_dir}")
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        traces = {
            solver_id: read_trace_csv(run_dir / f"{solver_id}.csv")
            for solver_id in manifest["solver_ids"]
        }
        return cls(manifest=manifest, traces=traces)


def run_benchmark(spec: ProblemSpec, solvers: Sequence[Dict],
                  budget: Optional[BenchBudget] = None,
                  out_dir=None) -> BenchRun:
    """Run every solver on one problem instance and back-fill suboptimality.

    The best (smallest finite) primal value across all traces defines the
    reference; ``subopt = primal - best`` is then nonnegative everywhere and
    zero where the best value was attained.
    """
    if not solvers:
        raise ValueError("need at least one solver")
    budget = budget or BenchBudget()
    problem, meta = build_problem(spec)
    t_start = time.perf_counter()
    traces: Dict[str, List[TraceRecord]] = {}
    infos = []
    for idx, solver in enumerate(solvers):
        solver_id = solver.get("id") or solver["name"]
        if solver_id in traces:
            solver_id = f"{solver_id}-{idx}"
        if budget.max_seconds is not None and time.perf_counter() - t_start > budget.max_seconds:
            infos.append({"name": solver.get("name"), "skipped": "time budget"})
            continue
        rows, info = run_solver(problem, meta, solver, budget)
        traces[solver_id] = rows
        info["id"] = solver_id
        infos.append(info)
    finite = [r.primal for rows in traces.values() for r in rows
              if np.isfinite(r.primal)]
    best = min(finite) if finite else np.nan
    for rows in traces.values():
        for r in rows:
            r.subopt = r.primal - best
    manifest = {
        "spec": dataclasses.asdict(spec),
        "solvers": infos,
        "solver_ids": list(traces.keys()),
        "budget": dataclasses.asdict(budget),
        "best_primal": best,
        "proxsplit_version": __version__,
        "numpy_version": np.__version__,
        "wall_clock_s": time.perf_counter() - t_start,
    }
    run = BenchRun(manifest=manifest, traces=traces)
    if out_dir is not None:
        run.save(out_dir)
    return run
