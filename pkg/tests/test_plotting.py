import xml.etree.ElementTree as ET

import pytest

from proxsplit.bench import BenchBudget, BenchRun, run_benchmark
from proxsplit.core import TraceRecord
from proxsplit.plotting import emit_svg_plot
from proxsplit.problems import ProblemSpec


@pytest.fixture(scope="module")
def two_solver_run():
    spec = ProblemSpec(kind="nearly_isotonic_logistic", n=40, p=20, lam=0.05, seed=1)
    return run_benchmark(spec, [{"name": "atos-v1"}, {"name": "atos-v2"}],
                         BenchBudget(max_iter=800, tol=1e-9))


def find_trace_ids(svg_text):
    root = ET.fromstring(svg_text)
    return {e.get("id") for e in root.iter() if (e.get("id") or "").startswith("trace-")}


class TestEmitSvgPlot:
    def test_two_solver_run_renders_two_series(self, two_solver_run):
        svg = emit_svg_plot(two_solver_run)
        assert find_trace_ids(svg) == {"trace-atos-v1", "trace-atos-v2"}

    def test_output_is_strictly_parseable_xml(self, two_solver_run):
        svg = emit_svg_plot(two_solver_run)
        root = ET.fromstring(svg)  # raises on malformed XML
        assert root.tag.endswith("svg")

    def test_single_point_trace_renders_marker(self):
        rows = [TraceRecord(iter=1, wall_ns=5, step_size=0.1, n_grad=1, n_func=1,
                            n_prox=2, primal=1.0, residual=0.1, subopt=0.5)]
        run = BenchRun(manifest={"spec": {"kind": "single"}, "solver_ids": ["only"]},
                       traces={"only": rows})
        svg = emit_svg_plot(run)
        assert find_trace_ids(svg) == {"trace-only"}

    def test_empty_run_raises(self):
        run = BenchRun(manifest={"spec": {}, "solver_ids": []}, traces={})
        with pytest.raises(ValueError):
            emit_svg_plot(run)

    def test_no_external_assets(self, two_solver_run):
        svg = emit_svg_plot(two_solver_run)
        assert "href=\"http" not in svg and "xlink:href=\"http" not in svg
