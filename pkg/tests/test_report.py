import json
import math
import re

import pytest

from conftest import correctness_set
from scfc import errors
from scfc.bootstrap import BootstrapConfig, BootstrapDistribution, ConfidenceInterval
from scfc.capability import Verdict, assess_capability
from scfc.ingest import EvaluationSpec, MetricDefinition, MetricKind, SpecificationLimits
from scfc.metrics import MetricValue
from scfc.pipeline import evaluate_records
from scfc.report import MetricResult, RunMetadata, build_report, render_json, render_markdown, verdict_line

RUN = RunMetadata(seed=0, resamples=1000, sample_size=42, confidence_level=0.95)


def result(name, point, mean, lower, upper, lsl=None, usl=None, n=42, kind=MetricKind.PROPORTION_CORRECT):
    definition = MetricDefinition(name, kind, SpecificationLimits(lsl, usl))
    # a two-point distribution whose mean is exactly `mean`-ish is enough here
    dist = BootstrapDistribution((lower, upper), (lower, upper), mean, BootstrapConfig(resamples=2, resample_size=n))
    ci = ConfidenceInterval(lower, upper, 0.95)
    return MetricResult(definition, MetricValue(point, kind, n), dist, ci, assess_capability(mean, ci, definition.limits))


def spec_for(*results):
    return EvaluationSpec(tuple(r.definition for r in results))


def case1():
    r = result("acceptance_rate", 35 / 42, 0.8340, 30 / 42, 39 / 42, lsl=0.70)
    return build_report(spec_for(r), [r], RUN)


class TestBuildReport:
    def test_single_metric(self):
        rep = case1()
        assert rep.overall_cpk == pytest.approx(1.12, abs=0.005)
        assert rep.overall_verdict is Verdict.CAPABLE
        assert rep.warnings == ()

    def test_min_rule(self):
        a = result("recall", 0.99, 0.9911, 0.9855, 0.997, lsl=0.98)
        b = result("other", 0.9, 0.9, 0.8, 0.95, lsl=0.82)
        rep = build_report(spec_for(a, b), [b, a], RUN)
        assert [r.definition.name for r in rep.per_metric] == ["recall", "other"]
        assert rep.overall_cpk == pytest.approx(0.8)
        assert rep.overall_verdict is Verdict.UNACCEPTABLE

    def test_degenerate_excellent_with_warning(self):
        r = result("acc", 1.0, 1.0, 1.0, 1.0, lsl=0.9, n=42)
        rep = build_report(spec_for(r), [r], RUN)
        assert rep.overall_cpk == math.inf
        assert rep.overall_verdict is Verdict.EXCELLENT
        assert any("degenerate" in w for w in rep.warnings)

    def test_missing_result(self):
        a = result("a", 0.9, 0.9, 0.8, 0.95, lsl=0.5)
        b = result("b", 0.9, 0.9, 0.8, 0.95, lsl=0.5)
        with pytest.raises(errors.MissingMetricResult):
            build_report(spec_for(a, b), [a], RUN)

    def test_resample_size_warning(self):
        r = result("acc", 0.8, 0.8, 0.7, 0.9, lsl=0.5, n=10)
        rep = build_report(spec_for(r), [r], RUN)
        assert any("resample size 10" in w for w in rep.warnings)

    def test_low_resamples_warning(self):
        r = result("acc", 0.8, 0.8, 0.7, 0.9, lsl=0.5)
        rep = build_report(EvaluationSpec((r.definition,), resamples=200), [r], RUN)
        assert any("below the recommended 1000" in w for w in rep.warnings)

    def test_overall_never_better_than_worst(self):
        results = [
            result(f"m{i}", 0.9, 0.9, 0.9 - s, 0.95, lsl=0.7)
            for i, s in enumerate([0.05, 0.1, 0.3, 0.01])
        ]
        rep = build_report(spec_for(*results), results, RUN)
        order = [Verdict.UNACCEPTABLE, Verdict.CAPABLE, Verdict.EXCELLENT]
        worst = min((r.capability.verdict for r in rep.per_metric), key=order.index)
        assert order.index(rep.overall_verdict) <= order.index(worst)


class TestRenderJson:
    def test_case1(self):
        doc = json.loads(render_json(case1()))
        (m,) = doc["metrics"]
        assert m["cpk"] == pytest.approx(1.12, abs=0.005)
        assert m["verdict"] == "capable"
        assert doc["overall"]["verdict"] == "capable"
        assert doc["schema_version"] == 1
        assert doc["warnings"] == []

    def test_degenerate_encoding(self):
        r = result("acc", 1.0, 1.0, 1.0, 1.0, lsl=0.9)
        doc = json.loads(render_json(build_report(spec_for(r), [r], RUN)))
        (m,) = doc["metrics"]
        assert m["cpk"] == "inf" and m["degenerate"] is True
        assert m["cpl"] == {"value": "inf", "degenerate": True}
        assert doc["overall"] == {**doc["overall"], "cpk": "inf", "degenerate": True}

    def test_negative_infinity(self):
        r = result("acc", 0.5, 0.5, 0.5, 0.5, lsl=0.9)
        doc = json.loads(render_json(build_report(spec_for(r), [r], RUN)))
        assert doc["metrics"][0]["cpk"] == "-inf"

    def test_six_significant_digits(self):
        text = render_json(case1())
        assert '"point_estimate": 0.833333' in text
        for number in re.findall(r"-?\d+\.\d+(?:e-?\d+)?", text):
            mant = number.split("e")[0].lstrip("-").replace(".", "").lstrip("0")
            assert len(mant) <= 6

    def test_stable_bytes(self):
        assert render_json(case1()) == render_json(case1())

    def test_stable_key_order(self):
        doc = json.loads(render_json(case1()))
        assert list(doc) == sorted(doc)

    def test_distinct_reports_render_differently(self):
        a = result("acc", 0.8, 0.8, 0.7, 0.9, lsl=0.5)
        b = result("acc", 0.8, 0.8, 0.7, 0.9, lsl=0.55)
        assert render_json(build_report(spec_for(a), [a], RUN)) != render_json(build_report(spec_for(b), [b], RUN))


class TestRenderMarkdown:
    def test_case1_row(self):
        md = render_markdown(case1())
        assert "| acceptance_rate | 0.8333 | 0.8340 | [0.7143, 0.9286] | LSL 0.70 | 1.12 | Capable |" in md
        assert "Overall verdict: Capable" in md
        assert "Warnings" not in md

    def test_two_rows(self):
        a = result("recall", 0.99, 0.9911, 0.9855, 0.997, lsl=0.98)
        b = result("latency", 150, 150, 140, 170, lsl=100, usl=200, kind=MetricKind.MEAN_VALUE)
        md = render_markdown(build_report(spec_for(a, b), [a, b], RUN))
        rows = [line for line in md.splitlines() if line.startswith("| ") and not line.startswith("| Metric")]
        assert len(rows) == 2
        assert "LSL 100.00, USL 200.00" in rows[1]
        assert "**Overall verdict:" in md

    def test_warnings_section(self):
        r = result("acc", 1.0, 1.0, 1.0, 1.0, lsl=0.9)
        rep = build_report(spec_for(r), [r], RUN, warnings=["custom warning"])
        md = render_markdown(rep)
        tail = md.split("## Warnings", 1)[1]
        for w in rep.warnings:
            assert f"- {w}" in tail
        assert "inf (degenerate)" in md


def test_json_and_markdown_agree():
    rep = evaluate_records(
        correctness_set([True] * 31 + [False] * 11),
        EvaluationSpec((MetricDefinition("acc", MetricKind.PROPORTION_CORRECT, SpecificationLimits(0.6)),), seed=5),
    )
    doc = json.loads(render_json(rep))["metrics"][0]
    row = next(line for line in render_markdown(rep).splitlines() if line.startswith("| acc "))
    cells = [c.strip() for c in row.strip("|").split("|")]
    point, mean, ci, _, cpk = cells[1], cells[2], cells[3], cells[4], cells[5]
    lower, upper = ci.strip("[]").split(", ")
    assert point == f"{doc['point_estimate']:.4f}"
    assert mean == f"{doc['bootstrap_mean']:.4f}"
    assert (lower, upper) == (f"{doc['ci']['lower']:.4f}", f"{doc['ci']['upper']:.4f}")
    assert cpk == f"{doc['cpk']:.2f}"


def test_verdict_line():
    assert verdict_line(case1()) == f"SCFC verdict: Capable (Cpk={case1().overall_cpk:.6g})"
