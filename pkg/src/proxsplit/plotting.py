"""Suboptimality-versus-time figures rendered to standalone SVG text.

The report path draws one log-scale line per solver with matplotlib's SVG
backend; each line carries a ``trace-<solver>`` group id so the series can
be located in the XML.  The output is plain XML with no external assets.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchRun

__all__ = ["emit_svg_plot"]

SUBOPT_FLOOR = 1e-16


def emit_svg_plot(run: BenchRun) -> str:
    """Render one run to an SVG document (returned as text).

    Raises ``ValueError`` when the run has no trace rows to plot.
    """
    if not run.traces or all(len(rows) == 0 for rows in run.traces.values()):
        raise ValueError("nothing to plot: run has no trace rows")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        for solver_id, rows in run.traces.items():
            if not rows:
                continue
            t = [r.wall_ns / 1e9 for r in rows]
            y = [max(r.subopt if r.subopt is not None else r.primal, SUBOPT_FLOOR)
                 for r in rows]
            pts = [(ti, yi) for ti, yi in zip(t, y)
                   if yi == yi and yi != float("inf")]
            if not pts:
                continue
            t, y = zip(*pts)
            (line,) = ax.plot(t, y, marker="o" if len(t) == 1 else None,
                              label=solver_id)
            line.set_gid(f"trace-{solver_id}")
        ax.set_yscale("log")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("objective suboptimality")
        kind = run.manifest.get("spec", {}).get("kind", "benchmark")
        ax.set_title(kind)
        ax.legend()
        buf = io.StringIO()
        fig.savefig(buf, format="svg")
        return buf.getvalue()
    finally:
        plt.close(fig)
