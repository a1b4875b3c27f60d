"""Command line interface.

Subcommands: ``datagen`` regenerates a synthetic problem instance to disk,
``solve`` runs one solver on a problem spec, ``bench`` runs a solver matrix
and ``plot`` renders a finished run to SVG.  Exit codes: 0 on success, 1 on
argument errors, 2 on solver nonconvergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .bench import BenchBudget, BenchRun, run_benchmark, run_solver, write_trace_csv
from .core import NonconvergenceError
from .plotting import emit_svg_plot
from .problems import PROBLEM_KINDS, ProblemSpec, build_problem
from .product_space import MultiProxProblem

__all__ = ["main"]

EXIT_OK = 0
EXIT_ARGS = 1
EXIT_NONCONVERGENCE = 2


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; remap to our code 1
    def error(self, message):
        raise _CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="proxsplit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("datagen", help="generate a synthetic problem instance")
    gen.add_argument("--kind", required=True, choices=PROBLEM_KINDS)
    gen.add_argument("--n", type=int)
    gen.add_argument("--p", type=int)
    gen.add_argument("--rows", type=int)
    gen.add_argument("--cols", type=int)
    gen.add_argument("--lam", type=float, default=0.1)
    gen.add_argument("--corr", type=float, default=0.0)
    gen.add_argument("--noise-sd", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    slv = sub.add_parser("solve", help="run one solver on a problem spec")
    slv.add_argument("--problem", required=True, help="path to a spec JSON file")
    slv.add_argument("--solver", required=True,
                     choices=("atos-v1", "atos-v2", "tos-fixed", "pdhg"))
    slv.add_argument("--tol", type=float, default=1e-10)
    slv.add_argument("--max-iter", type=int, default=10_000)
    slv.add_argument("--beta", type=float, default=0.5, help="pdhg balance parameter")
    slv.add_argument("--gamma-scale", type=float, default=1.0,
                     help="tos-fixed step = gamma-scale / L_f")
    slv.add_argument("--out", required=True)

    ben = sub.add_parser("bench", help="run a benchmark matrix")
    ben.add_argument("--matrix", required=True, help="path to a matrix JSON file")
    ben.add_argument("--out", required=True)

    plo = sub.add_parser("plot", help="render a run directory to SVG")
    plo.add_argument("--run", required=True)
    plo.add_argument("--out", required=True)
    return parser


def _cmd_datagen(args) -> int:
    spec = ProblemSpec(kind=args.kind, n=args.n, p=args.p, rows=args.rows,
                       cols=args.cols, lam=args.lam, corr=args.corr,
                       seed=args.seed, noise_sd=args.noise_sd)
    problem, meta = build_problem(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(spec.to_json())
    np.savetxt(out / "truth.csv", meta["x_truth"], delimiter=",")
    np.savetxt(out / "design.csv", np.atleast_2d(meta["design"]), delimiter=",")
    np.savetxt(out / "targets.csv", np.atleast_1d(meta["targets"]), delimiter=",")
    print(f"wrote {out / 'spec.json'} (dim={problem.dim})")
    return EXIT_OK


def _load_spec(path) -> ProblemSpec:
    path = Path(path)
    if not path.exists():
        raise _CliError(f"problem spec not found: {path}")
    return ProblemSpec.from_json(path.read_text())


def _cmd_solve(args) -> int:
    spec = _load_spec(args.problem)
    problem, meta = build_problem(spec)
    budget = BenchBudget(max_iter=args.max_iter, tol=args.tol)
    solver = {"name": args.solver, "beta": args.beta,
              "gamma_scale": args.gamma_scale}
    trace, info = run_solver(problem, meta, solver, budget)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / f"{args.solver}.csv", trace)
    with open(out / "result.json", "w") as fh:
        json.dump({"spec": dataclasses.asdict(spec), "solver": info,
                   "iterations": trace[-1].iter if trace else 0,
                   "final_primal": trace[-1].primal if trace else None,
                   "final_residual": trace[-1].residual if trace else None},
                  fh, indent=2, sort_keys=True)
    status = "converged" if info.get("converged") else "NOT converged"
    print(f"{args.solver} on {spec.kind}: {status} "
          f"after {trace[-1].iter if trace else 0} iterations")
    return EXIT_OK if info.get("converged") else EXIT_NONCONVERGENCE


def _cmd_bench(args) -> int:
    matrix_path = Path(args.matrix)
    if not matrix_path.exists():
        raise _CliError(f"matrix file not found: {matrix_path}")
    matrix = json.loads(matrix_path.read_text())
    problems = matrix.get("problems")
    solvers = matrix.get("solvers")
    if not problems or not solvers:
        raise _CliError("matrix JSON needs non-empty 'problems' and 'solvers'")
    budget = BenchBudget(**matrix.get("budget", {}))
    out = Path(args.out)
    worst = EXIT_OK
    for entry in problems:
        spec = ProblemSpec(**entry)
        run_dir = out / f"{spec.kind}_seed{spec.seed}"
        run = run_benchmark(spec, solvers, budget, out_dir=run_dir)
        converged = all(info.get("converged", True) for info in run.manifest["solvers"])
        if not converged:
            worst = EXIT_NONCONVERGENCE
        print(f"{spec.kind} seed {spec.seed}: best primal "
              f"{run.manifest['best_primal']:.6g} -> {run_dir}")
    return worst


def _cmd_plot(args) -> int:
    run = BenchRun.load(args.run)
    svg = emit_svg_plot(run)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    print(f"wrote {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "datagen":
            return _cmd_datagen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "plot":
            return _cmd_plot(args)
        raise _CliError(f"unknown command {args.command!r}")
    except (_CliError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except NonconvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
