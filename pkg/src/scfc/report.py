"""Evaluation report assembly and rendering (canonical JSON and Markdown)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import __version__
from .bootstrap import BootstrapDistribution, ConfidenceInterval
from .capability import CapabilityResult, IndexValue, Verdict, classify_verdict
from .errors import MissingMetricResult
from .ingest import EvaluationSpec, MetricDefinition, SpecificationLimits
from .metrics import MetricValue

SCHEMA_VERSION = 1
SIG_DIGITS = 6


@dataclass(frozen=True)
class MetricResult:
    definition: MetricDefinition
    point: MetricValue
    distribution: BootstrapDistribution
    ci: ConfidenceInterval
    capability: CapabilityResult

    @property
    def bootstrap_mean(self) -> float:
        return self.distribution.mean


@dataclass(frozen=True)
class RunMetadata:
    seed: int
    resamples: int
    sample_size: int
    confidence_level: float
    timestamp: str | None = None
    tool_version: str = __version__


@dataclass(frozen=True)
class EvaluationReport:
    run: RunMetadata
    per_metric: tuple[MetricResult, ...]
    overall_cpk: float
    overall_verdict: Verdict
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def overall_degenerate(self) -> bool:
        return any(r.capability.degenerate and r.capability.cpk == self.overall_cpk for r in self.per_metric)


def build_report(
    spec: EvaluationSpec,
    results: Sequence[MetricResult],
    run: RunMetadata,
    warnings: Sequence[str] = (),
) -> EvaluationReport:
    by_name = {r.definition.name: r for r in results}
    missing = [m.name for m in spec.metrics if m.name not in by_name]
    if missing:
        raise MissingMetricResult(f"no result for metric(s): {', '.join(missing)}")
    ordered = tuple(by_name[m.name] for m in spec.metrics)

    notes = list(warnings)
    if spec.resamples < 1000:
        notes.append(f"resamples={spec.resamples} is below the recommended 1000")
    for r in ordered:
        name = r.definition.name
        for side, ix in (("cpl", r.capability.cpl), ("cpu", r.capability.cpu)):
            if ix is not None and ix.degenerate:
                notes.append(f"{name}: {side} is degenerate ({format_value(ix.value)}): zero-width confidence interval on that side")
        size = r.distribution.config.resample_size
        if size != run.sample_size:
            notes.append(f"{name}: resample size {size} overrides the sample size {run.sample_size}")

    overall = min(r.capability.cpk for r in ordered)
    return EvaluationReport(run, ordered, overall, classify_verdict(overall), tuple(notes))


# ---------------------------------------------------------------------------
# rendering


def _num(x: Any) -> Any:
    """6 significant digits; infinities as strings."""
    if isinstance(x, bool) or x is None or isinstance(x, int):
        return x
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{SIG_DIGITS}g}")


def format_value(x: float) -> str:
    v = _num(x)
    return v if isinstance(v, str) else f"{v:g}"


def _index(ix: IndexValue | None) -> dict | None:
    if ix is None:
        return None
    return {"value": _num(ix.value), "degenerate": ix.degenerate}


def _limits(lim: SpecificationLimits) -> dict:
    return {"lsl": _num(lim.lsl), "usl": _num(lim.usl)}


def report_dict(report: EvaluationReport) -> dict:
    run = report.run
    metrics = []
    for r in report.per_metric:
        cap = r.capability
        metrics.append(
            {
                "name": r.definition.name,
                "kind": r.definition.kind.value,
                "positive_label": r.definition.positive_label,
                "limits": _limits(r.definition.limits),
                "point_estimate": _num(r.point.value),
                "n_basis": r.point.n_basis,
                "bootstrap_mean": _num(r.bootstrap_mean),
                "resample_size": r.distribution.config.resample_size,
                "ci": {"lower": _num(r.ci.lower), "upper": _num(r.ci.upper), "level": _num(r.ci.level)},
                "cpl": _index(cap.cpl),
                "cpu": _index(cap.cpu),
                "cpk": _num(cap.cpk),
                "degenerate": cap.degenerate,
                "verdict": cap.verdict.value,
                "note": cap.verdict.note,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "run": {
            "seed": run.seed,
            "resamples": run.resamples,
            "sample_size": run.sample_size,
            "confidence_level": _num(run.confidence_level),
            "timestamp": run.timestamp,
            "tool_version": run.tool_version,
        },
        "metrics": metrics,
        "overall": {
            "cpk": _num(report.overall_cpk),
            "degenerate": report.overall_degenerate,
            "verdict": report.overall_verdict.value,
            "note": report.overall_verdict.note,
        },
        "warnings": list(report.warnings),
    }


def render_json(report: EvaluationReport) -> str:
    return json.dumps(report_dict(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fixed(x: float, places: int) -> str:
    v = _num(x)
    return v if isinstance(v, str) else f"{v:.{places}f}"


def _limit_text(value: float) -> str:
    v = _num(value)
    return f"{v:.2f}" if round(v, 2) == v else f"{v:g}"


def _limits_text(lim: SpecificationLimits) -> str:
    parts = []
    if lim.lsl is not None:
        parts.append(f"LSL {_limit_text(lim.lsl)}")
    if lim.usl is not None:
        parts.append(f"USL {_limit_text(lim.usl)}")
    return ", ".join(parts)


def _cpk_text(cpk: float, degenerate: bool) -> str:
    text = _fixed(cpk, 2)
    return f"{text} (degenerate)" if degenerate else text


def verdict_line(report: EvaluationReport) -> str:
    return f"SCFC verdict: {report.overall_verdict.label} (Cpk={format_value(report.overall_cpk)})"


def render_markdown(report: EvaluationReport) -> str:
    run = report.run
    level = f"{_num(run.confidence_level) * 100:g}%"
    lines = [
        "# SCFC evaluation report",
        "",
        f"- seed: {run.seed}",
        f"- resamples: {run.resamples}",
        f"- sample size: {run.sample_size}",
        f"- confidence level: {level}",
    ]
    if run.timestamp:
        lines.append(f"- timestamp: {run.timestamp}")
    lines += [
        f"- tool version: {run.tool_version}",
        "",
        f"| Metric | Point | Bootstrap mean | CI ({level}) | Limits | Cpk | Verdict |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in report.per_metric:
        cap = r.capability
        lines.append(
            "| "
            + " | ".join(
                [
                    r.definition.name,
                    _fixed(r.point.value, 4),
                    _fixed(r.bootstrap_mean, 4),
                    f"[{_fixed(r.ci.lower, 4)}, {_fixed(r.ci.upper, 4)}]",
                    _limits_text(r.definition.limits),
                    _cpk_text(cap.cpk, cap.degenerate),
                    cap.verdict.label,
                ]
            )
            + " |"
        )
    lines += [
        "",
        f"**Overall verdict: {report.overall_verdict.label}** "
        f"(Cpk={_cpk_text(report.overall_cpk, report.overall_degenerate)}): {report.overall_verdict.note}",
    ]
    if report.warnings:
        lines += ["", "## Warnings", ""]
        lines += [f"- {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"
