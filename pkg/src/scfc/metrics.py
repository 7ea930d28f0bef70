"""Point-estimate performance metrics.

Proportion metrics are computed as exact integer ratios and rounded once
(Python's int/int true division is correctly rounded), so repeated
evaluation on equal inputs always agrees bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyRecordSet, NonFiniteValue, UndefinedMetric, WrongOutcomeKind
from .ingest import ConfusionCounts, EvaluationRecord, MetricDefinition, MetricKind, OutcomeKind, RecordSet


@dataclass(frozen=True)
class MetricValue:
    value: float
    kind: MetricKind
    n_basis: int


def _require_kind(records: RecordSet, kind: OutcomeKind) -> None:
    if records.outcome_kind is not kind:
        raise WrongOutcomeKind(f"expected {kind.value} records, got {records.outcome_kind.value}")


def confusion_from_records(records: RecordSet, positive_label: str) -> ConfusionCounts:
    _require_kind(records, OutcomeKind.CLASSIFICATION)
    tp = fp = fn = 0
    for rec in records:
        if rec.actual == positive_label:
            if rec.predicted == positive_label:
                tp += 1
            else:
                fn += 1
        elif rec.predicted == positive_label:
            fp += 1
    tn = len(records) - tp - fp - fn
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(num: int, den: int, kind: MetricKind, den_name: str) -> MetricValue:
    if den == 0:
        raise UndefinedMetric(f"{kind.value} is undefined: {den_name} is zero", den_name)
    return MetricValue(num / den, kind, den)


def classification_metric(counts: ConfusionCounts, kind: MetricKind | str) -> MetricValue:
    """Recall, precision, FPR, accuracy or F1 from a confusion matrix."""
    kind = MetricKind(kind)
    tp, fp, tn, fn = counts.as_tuple()
    if kind is MetricKind.RECALL:
        return _ratio(tp, tp + fn, kind, "tp+fn")
    if kind is MetricKind.PRECISION:
        return _ratio(tp, tp + fp, kind, "tp+fp")
    if kind is MetricKind.FALSE_POSITIVE_RATE:
        return _ratio(fp, fp + tn, kind, "fp+tn")
    if kind is MetricKind.ACCURACY:
        return _ratio(tp + tn, tp + fp + tn + fn, kind, "tp+fp+tn+fn")
    if kind is MetricKind.F1:
        if tp + fp == 0:
            raise UndefinedMetric("f1 is undefined: tp+fp is zero", "tp+fp")
        if tp + fn == 0:
            raise UndefinedMetric("f1 is undefined: tp+fn is zero", "tp+fn")
        # 2PR/(P+R) == 2tp/(2tp+fp+fn); 0 when tp == 0
        return MetricValue(2 * tp / (2 * tp + fp + fn), kind, tp + fp + fn)
    raise WrongOutcomeKind(f"{kind.value} is not a classification metric")


def proportion_correct(records: RecordSet) -> MetricValue:
    _require_kind(records, OutcomeKind.CORRECTNESS)
    if not len(records):
        raise EmptyRecordSet("proportion_correct needs at least one record")
    hits = sum(1 for r in records if r.correct)
    return MetricValue(hits / len(records), MetricKind.PROPORTION_CORRECT, len(records))


def mean_value(records: RecordSet) -> MetricValue:
    _require_kind(records, OutcomeKind.CONTINUOUS)
    if not len(records):
        raise EmptyRecordSet("mean_value needs at least one record")
    values = [r.value for r in records]
    for r in records:
        if not math.isfinite(r.value):
            raise NonFiniteValue(f"record {r.id!r} has non-finite value {r.value!r}")
    return MetricValue(math.fsum(values) / len(values), MetricKind.MEAN_VALUE, len(values))


def evaluate_metric(definition: MetricDefinition, records: RecordSet) -> MetricValue:
    """Compute ``definition`` on a record set."""
    definition.check_compatible(records.outcome_kind)
    if definition.kind.is_classification:
        records.require_nonempty()
        counts = confusion_from_records(records, definition.positive_label)
        return classification_metric(counts, definition.kind)
    if definition.kind is MetricKind.PROPORTION_CORRECT:
        return proportion_correct(records)
    return mean_value(records)


# ---------------------------------------------------------------------------
# bootstrappable statistics


class MetricStatistic:
    """A metric prepared for repeated evaluation on resampled index arrays.

    ``encode`` turns a record set into a compact numpy array once;
    ``on_indices`` evaluates the metric on ``encoded[indices]``. Calling the
    statistic on a record set, or on any sequence of records (a resampled
    multiset may repeat records), gives the plain estimate.
    """

    # cell codes for classification records
    TP, FP, TN, FN = 0, 1, 2, 3

    def __init__(self, definition: MetricDefinition) -> None:
        self.definition = definition
        self.kind = definition.kind

    def __call__(self, records: RecordSet | Sequence[EvaluationRecord]) -> float:
        if isinstance(records, RecordSet):
            return evaluate_metric(self.definition, records).value
        encoded = self._encode(list(records))
        return self.on_indices(encoded, np.arange(len(encoded)))

    def encode(self, records: RecordSet) -> np.ndarray:
        self.definition.check_compatible(records.outcome_kind)
        records.require_nonempty()
        return self._encode(records.records)

    def _encode(self, records: Sequence[EvaluationRecord]) -> np.ndarray:
        if not records:
            raise EmptyRecordSet(f"{self.kind.value} needs at least one record")
        for r in records:
            self.definition.check_compatible(r.kind)
        if self.kind.is_classification:
            pos = self.definition.positive_label
            codes = []
            for r in records:
                a, p = r.actual == pos, r.predicted == pos
                codes.append(self.TP if a and p else self.FN if a else self.FP if p else self.TN)
            return np.asarray(codes, dtype=np.int8)
        if self.kind is MetricKind.PROPORTION_CORRECT:
            return np.asarray([r.correct for r in records], dtype=bool)
        values = np.asarray([r.value for r in records], dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("record set contains non-finite values")
        return values

    def on_indices(self, encoded: np.ndarray, indices: np.ndarray) -> float:
        sample = encoded[indices]
        if self.kind.is_classification:
            tp, fp, tn, fn = (int(c) for c in np.bincount(sample, minlength=4))
            return classification_metric(ConfusionCounts(tp, fp, tn, fn), self.kind).value
        if self.kind is MetricKind.PROPORTION_CORRECT:
            return int(np.count_nonzero(sample)) / len(sample)
        return math.fsum(sample.tolist()) / len(sample)


# Any callable from a sequence of records to a real number is bootstrappable.
Statistic = Callable[[Sequence[EvaluationRecord]], float]
