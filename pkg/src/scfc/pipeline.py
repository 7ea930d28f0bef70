"""End-to-end evaluation: records or counts plus a spec in, a report out."""

from __future__ import annotations

from typing import Sequence

from .bootstrap import BootstrapConfig, bootstrap_counts, bootstrap_records, percentile_ci
from .capability import assess_capability
from .ingest import ConfusionCounts, EvaluationSpec, RecordSet
from .metrics import MetricStatistic, classification_metric, evaluate_metric
from .report import EvaluationReport, MetricResult, RunMetadata, build_report


def _config(spec: EvaluationSpec) -> BootstrapConfig:
    return BootstrapConfig(
        resamples=spec.resamples,
        resample_size=spec.resample_size,
        confidence_level=spec.confidence_level,
        seed=spec.seed,
    )


def _run_metadata(spec: EvaluationSpec, sample_size: int, timestamp: str | None) -> RunMetadata:
    return RunMetadata(spec.seed, spec.resamples, sample_size, spec.confidence_level, timestamp)


def evaluate_records(
    records: RecordSet,
    spec: EvaluationSpec,
    *,
    workers: int | None = 1,
    timestamp: str | None = None,
    warnings: Sequence[str] = (),
) -> EvaluationReport:
    for m in spec.metrics:
        m.check_compatible(records.outcome_kind)
    records.require_nonempty()
    config = _config(spec)
    results = []
    for m in spec.metrics:
        point = evaluate_metric(m, records)
        dist = bootstrap_records(records, MetricStatistic(m), config, workers=workers)
        ci = percentile_ci(dist)
        results.append(MetricResult(m, point, dist, ci, assess_capability(dist.mean, ci, m.limits)))
    return build_report(spec, results, _run_metadata(spec, len(records), timestamp), warnings)


def evaluate_counts(
    counts: ConfusionCounts,
    spec: EvaluationSpec,
    *,
    workers: int | None = 1,
    timestamp: str | None = None,
    warnings: Sequence[str] = (),
) -> EvaluationReport:
    for m in spec.metrics:
        m.check_compatible(None)
    config = _config(spec)
    results = []
    for m in spec.metrics:
        point = classification_metric(counts, m.kind)
        dist = bootstrap_counts(counts, m.kind, config, workers=workers)
        ci = percentile_ci(dist)
        results.append(MetricResult(m, point, dist, ci, assess_capability(dist.mean, ci, m.limits)))
    return build_report(spec, results, _run_metadata(spec, counts.total, timestamp), warnings)
