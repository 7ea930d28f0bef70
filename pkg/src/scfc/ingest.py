"""Parsing of evaluation records, aggregate confusion counts and spec configs.

Records arrive as CSV (with a header row) or JSONL. The reserved names
``id``, ``correct``, ``actual``, ``predicted`` and ``value`` determine the
outcome variant; every other column is a stratum attribute.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Any, Iterable, Iterator, Mapping, Sequence

from .errors import (
    AllZero,
    AmbiguousOutcome,
    DuplicateId,
    EmptyRecordSet,
    InconsistentStrataKeys,
    InvalidConfig,
    InvertedLimits,
    LimitOutOfRange,
    MalformedRow,
    MissingField,
    MissingOutcome,
    MissingPositiveLabel,
    NegativeCount,
    NoLimits,
    SCFCError,
    UnknownKind,
    WrongOutcomeKind,
)

RESERVED = ("id", "correct", "actual", "predicted", "value")
_TRUE = {"true", "1"}
_FALSE = {"false", "0"}


class OutcomeKind(str, Enum):
    CORRECTNESS = "correctness"
    CLASSIFICATION = "classification"
    CONTINUOUS = "continuous"


class RecordFormat(str, Enum):
    CSV = "csv"
    JSONL = "jsonl"


class MetricKind(str, Enum):
    RECALL = "recall"
    PRECISION = "precision"
    FALSE_POSITIVE_RATE = "false_positive_rate"
    ACCURACY = "accuracy"
    F1 = "f1"
    PROPORTION_CORRECT = "proportion_correct"
    MEAN_VALUE = "mean_value"

    @property
    def is_classification(self) -> bool:
        return self in _CLASSIFICATION_KINDS

    @property
    def is_proportion(self) -> bool:
        return self is not MetricKind.MEAN_VALUE


_CLASSIFICATION_KINDS = frozenset(
    {
        MetricKind.RECALL,
        MetricKind.PRECISION,
        MetricKind.FALSE_POSITIVE_RATE,
        MetricKind.ACCURACY,
        MetricKind.F1,
    }
)


@dataclass(frozen=True)
class EvaluationRecord:
    """One evaluated test instance.

    Exactly one outcome variant must be set: ``correct``, the
    ``actual``/``predicted`` pair, or ``value``.
    """

    id: str
    strata: Mapping[str, str] = field(default_factory=dict)
    correct: bool | None = None
    actual: str | None = None
    predicted: str | None = None
    value: float | None = None

    def __post_init__(self) -> None:
        has_labels = self.actual is not None or self.predicted is not None
        present = [
            self.correct is not None,
            has_labels,
            self.value is not None,
        ]
        if sum(present) > 1:
            raise AmbiguousOutcome(f"record {self.id!r} has more than one outcome variant")
        if sum(present) == 0:
            raise MissingOutcome(f"record {self.id!r} has no outcome")
        if has_labels and (self.actual is None or self.predicted is None):
            raise MissingOutcome(f"record {self.id!r} needs both actual and predicted")

    @property
    def kind(self) -> OutcomeKind:
        if self.correct is not None:
            return OutcomeKind.CORRECTNESS
        if self.actual is not None:
            return OutcomeKind.CLASSIFICATION
        return OutcomeKind.CONTINUOUS


@dataclass(frozen=True)
class RecordSet:
    """An ordered, homogeneous collection of records."""

    records: tuple[EvaluationRecord, ...]
    outcome_kind: OutcomeKind
    strata_keys: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "strata_keys", tuple(self.strata_keys))
        seen: set[str] = set()
        keyset = set(self.strata_keys)
        for rec in self.records:
            if rec.kind is not self.outcome_kind:
                raise WrongOutcomeKind(
                    f"record {rec.id!r} is {rec.kind.value}, set is {self.outcome_kind.value}"
                )
            if rec.id in seen:
                raise DuplicateId(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            if set(rec.strata) != keyset:
                raise InconsistentStrataKeys(
                    f"record {rec.id!r} strata keys {sorted(rec.strata)} != {sorted(keyset)}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EvaluationRecord]:
        return iter(self.records)

    def take(self, indices: Iterable[int]) -> list[EvaluationRecord]:
        """Records at ``indices`` (repeats allowed, so this is a list, not a set)."""
        return [self.records[i] for i in indices]

    def subset(self, indices: Iterable[int]) -> RecordSet:
        """A new record set with the records at ``indices``, in that order."""
        return RecordSet(self.take(indices), self.outcome_kind, self.strata_keys)

    def require_nonempty(self) -> None:
        if not self.records:
            raise EmptyRecordSet("record set is empty")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise InvalidConfig(f"{name} must be an integer, got {v!r}")
            if v < 0:
                raise NegativeCount(f"{name} is negative ({v})")
        if self.total == 0:
            raise AllZero("all confusion counts are zero")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.tp, self.fp, self.tn, self.fn)


@dataclass(frozen=True)
class SpecificationLimits:
    lsl: float | None = None
    usl: float | None = None

    def __post_init__(self) -> None:
        if self.lsl is None and self.usl is None:
            raise NoLimits("at least one of lsl/usl is required")
        for name in ("lsl", "usl"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise InvalidConfig(f"{name} must be finite, got {v!r}")
        if self.lsl is not None and self.usl is not None and self.lsl >= self.usl:
            raise InvertedLimits(f"lsl ({self.lsl}) must be below usl ({self.usl})")

    def check_unit_interval(self) -> None:
        for name in ("lsl", "usl"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise LimitOutOfRange(f"{name}={v} outside [0, 1] for a proportion metric")


@dataclass(frozen=True)
class MetricDefinition:
    name: str
    kind: MetricKind
    limits: SpecificationLimits
    positive_label: str | None = None

    def __post_init__(self) -> None:
        if self.kind.is_classification and not self.positive_label:
            raise MissingPositiveLabel(f"metric {self.name!r} ({self.kind.value}) needs positive_label")
        if self.kind.is_proportion:
            self.limits.check_unit_interval()

    def check_compatible(self, outcome_kind: OutcomeKind | None) -> None:
        """Raise unless this metric can be computed from ``outcome_kind``.

        ``None`` stands for aggregate confusion counts.
        """
        if self.kind.is_classification:
            ok = outcome_kind in (None, OutcomeKind.CLASSIFICATION)
        elif self.kind is MetricKind.PROPORTION_CORRECT:
            ok = outcome_kind is OutcomeKind.CORRECTNESS
        else:
            ok = outcome_kind is OutcomeKind.CONTINUOUS
        if not ok:
            source = "confusion counts" if outcome_kind is None else f"{outcome_kind.value} records"
            raise WrongOutcomeKind(f"metric {self.name!r} ({self.kind.value}) cannot be computed from {source}")


@dataclass(frozen=True)
class EvaluationSpec:
    metrics: tuple[MetricDefinition, ...]
    confidence_level: float = 0.95
    resamples: int = 1000
    seed: int = 0
    resample_size: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.metrics:
            raise InvalidConfig("at least one metric is required")
        names = [m.name for m in self.metrics]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise InvalidConfig(f"duplicate metric names: {', '.join(dupes)}")
        if not 0.0 < self.confidence_level < 1.0:
            raise InvalidConfig(f"confidence_level must be in (0, 1), got {self.confidence_level}")
        if self.resamples < 100:
            raise InvalidConfig(f"resamples must be >= 100, got {self.resamples}")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be nonnegative, got {self.seed}")
        if self.resample_size is not None and self.resample_size < 1:
            raise InvalidConfig(f"resample_size must be positive, got {self.resample_size}")


# ---------------------------------------------------------------------------
# records


def _read(source: str | IO[str]) -> str:
    return source if isinstance(source, str) else source.read()


def _infer_kind(keys: Iterable[str], location: int | str) -> OutcomeKind:
    keys = set(keys)
    variants = []
    if "correct" in keys:
        variants.append(OutcomeKind.CORRECTNESS)
    if "actual" in keys or "predicted" in keys:
        if not {"actual", "predicted"} <= keys:
            raise MissingOutcome("classification outcome needs both 'actual' and 'predicted'", location)
        variants.append(OutcomeKind.CLASSIFICATION)
    if "value" in keys:
        variants.append(OutcomeKind.CONTINUOUS)
    if len(variants) > 1:
        names = ", ".join(v.value for v in variants)
        raise AmbiguousOutcome(f"more than one outcome variant present ({names})", location)
    if not variants:
        raise MissingOutcome("no outcome column: expected 'correct', 'actual'+'predicted' or 'value'", location)
    return variants[0]


def _parse_bool(raw: Any, line: int) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, int) and raw in (0, 1):
        return bool(raw)
    text = str(raw).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise MalformedRow(f"cannot read {raw!r} as a boolean", line)


def _parse_float(raw: Any, line: int) -> float:
    if isinstance(raw, bool):
        raise MalformedRow(f"cannot read {raw!r} as a number", line)
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise MalformedRow(f"cannot read {raw!r} as a number", line) from None


def _parse_label(raw: Any, name: str, line: int) -> str:
    if raw is None or isinstance(raw, (dict, list)):
        raise MalformedRow(f"{name!r} must be a scalar label", line)
    text = str(raw)
    if text == "":
        raise MalformedRow(f"empty {name!r}", line)
    return text


def _build_record(
    row: Mapping[str, Any],
    kind: OutcomeKind,
    strata_keys: Sequence[str],
    line: int,
    row_number: int,
) -> EvaluationRecord:
    if "id" in row:
        rid = row["id"]
        if rid is None or str(rid) == "":
            raise MalformedRow("empty id", line)
        rid = str(rid)
    else:
        rid = str(row_number)
    strata = {}
    for key in strata_keys:
        v = row[key]
        if v is None or isinstance(v, (dict, list)) or str(v) == "":
            raise MalformedRow(f"missing value for stratum {key!r}", line)
        strata[key] = str(v)
    if kind is OutcomeKind.CORRECTNESS:
        return EvaluationRecord(rid, strata, correct=_parse_bool(row["correct"], line))
    if kind is OutcomeKind.CLASSIFICATION:
        return EvaluationRecord(
            rid,
            strata,
            actual=_parse_label(row["actual"], "actual", line),
            predicted=_parse_label(row["predicted"], "predicted", line),
        )
    return EvaluationRecord(rid, strata, value=_parse_float(row["value"], line))


def _assemble(rows: Iterable[tuple[int, Mapping[str, Any]]], kind, strata_keys) -> RecordSet:
    records = []
    seen: dict[str, int] = {}
    for row_number, (line, row) in enumerate(rows, start=1):
        rec = _build_record(row, kind, strata_keys, line, row_number)
        if rec.id in seen:
            raise DuplicateId(f"duplicate id {rec.id!r} (first seen on line {seen[rec.id]})", line)
        seen[rec.id] = line
        records.append(rec)
    return RecordSet(tuple(records), kind, tuple(strata_keys))


def _parse_csv(text: str) -> RecordSet:
    reader = csv.reader(io.StringIO(text))
    header = None
    for raw in reader:
        if raw:
            header = [h.strip() for h in raw]
            break
    if header is None:
        raise MalformedRow("missing header row", 1)
    header_line = reader.line_num
    if len(set(header)) != len(header) or "" in header:
        raise MalformedRow("header has empty or repeated column names", header_line)
    kind = _infer_kind(header, header_line)
    strata_keys = [h for h in header if h not in RESERVED]

    def rows():
        for raw in reader:
            if not raw or (len(raw) == 1 and raw[0].strip() == ""):
                continue
            if len(raw) != len(header):
                raise MalformedRow(f"expected {len(header)} fields, got {len(raw)}", reader.line_num)
            yield reader.line_num, dict(zip(header, raw))

    try:
        return _assemble(rows(), kind, strata_keys)
    except csv.Error as exc:
        raise MalformedRow(f"CSV syntax error: {exc}", reader.line_num) from None


def _parse_jsonl(text: str) -> RecordSet:
    parsed: list[tuple[int, dict]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"invalid JSON: {exc.msg}", line_no) from None
        if not isinstance(obj, dict):
            raise MalformedRow("each line must be a JSON object", line_no)
        parsed.append((line_no, obj))
    if not parsed:
        raise MissingOutcome("no records; cannot infer outcome kind", 1)
    first_line, first = parsed[0]
    kind = _infer_kind(first.keys(), first_line)
    strata_keys = [k for k in first if k not in RESERVED]
    keyset = set(first)
    for line_no, obj in parsed[1:]:
        if set(obj) == keyset:
            continue
        if _infer_kind(obj.keys(), line_no) is not kind:
            raise AmbiguousOutcome("outcome variant differs from the first record", line_no)
        if ("id" in obj) != ("id" in keyset):
            raise MalformedRow("'id' must be present on every line or on none", line_no)
        raise InconsistentStrataKeys(
            f"strata keys {sorted(k for k in obj if k not in RESERVED)} != {sorted(strata_keys)}", line_no
        )
    return _assemble(parsed, kind, strata_keys)


def parse_records(source: str | IO[str], format: RecordFormat | str = RecordFormat.CSV) -> RecordSet:
    """Parse records from CSV or JSONL text (or an open text stream)."""
    fmt = RecordFormat(format)
    text = _read(source)
    if fmt is RecordFormat.CSV:
        return _parse_csv(text)
    return _parse_jsonl(text)


def render_records(records: RecordSet, format: RecordFormat | str = RecordFormat.CSV) -> str:
    """Render records in the same format :func:`parse_records` reads."""
    fmt = RecordFormat(format)
    outcome_cols = {
        OutcomeKind.CORRECTNESS: ("correct",),
        OutcomeKind.CLASSIFICATION: ("actual", "predicted"),
        OutcomeKind.CONTINUOUS: ("value",),
    }[records.outcome_kind]
    columns = ("id", *records.strata_keys, *outcome_cols)

    def row(rec: EvaluationRecord) -> dict[str, Any]:
        out: dict[str, Any] = {"id": rec.id}
        out.update({k: rec.strata[k] for k in records.strata_keys})
        for col in outcome_cols:
            out[col] = getattr(rec, col)
        return out

    if fmt is RecordFormat.JSONL:
        return "".join(json.dumps(row(r)) + "\n" for r in records)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        values = row(rec)
        if "correct" in values:
            values["correct"] = "true" if values["correct"] else "false"
        if "value" in values:
            values["value"] = repr(values["value"])
        writer.writerow([values[c] for c in columns])
    return buf.getvalue()


def format_for_path(path: str) -> RecordFormat:
    """JSONL for ``.jsonl``/``.ndjson`` files, CSV otherwise."""
    lower = str(path).lower()
    if lower.endswith((".jsonl", ".ndjson")):
        return RecordFormat.JSONL
    return RecordFormat.CSV


# ---------------------------------------------------------------------------
# counts and spec


def _load_object(source: str | IO[str], what: str) -> dict:
    try:
        obj = json.loads(_read(source))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"invalid JSON in {what}: {exc.msg}", exc.lineno) from None
    if not isinstance(obj, dict):
        raise InvalidConfig(f"{what} must be a JSON object", "$")
    return obj


def _reject_unknown(obj: Mapping, allowed: Iterable[str], path: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise InvalidConfig(f"unknown key(s): {', '.join(unknown)}", path)


def parse_counts(source: str | IO[str]) -> ConfusionCounts:
    """Parse ``{"tp": .., "fp": .., "tn": .., "fn": ..}``."""
    obj = _load_object(source, "counts")
    cells = ("tp", "fp", "tn", "fn")
    _reject_unknown(obj, cells, "$")
    values = {}
    for name in cells:
        if name not in obj:
            raise MissingField(f"missing field {name!r}", f"$.{name}")
        v = obj[name]
        if isinstance(v, bool) or not isinstance(v, int):
            raise InvalidConfig(f"{name} must be an integer, got {v!r}", f"$.{name}")
        if v < 0:
            raise NegativeCount(f"{name} is negative ({v})", f"$.{name}")
        values[name] = v
    try:
        return ConfusionCounts(**values)
    except SCFCError as exc:
        raise type(exc)(exc.message, "$") from None


_METRIC_KEYS = ("name", "kind", "positive_label", "lsl", "usl")
_SPEC_KEYS = ("metrics", "confidence_level", "resamples", "seed", "resample_size")


def _number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidConfig(f"expected a number, got {v!r}", path)
    return float(v)


def _integer(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidConfig(f"expected an integer, got {v!r}", path)
    return v


def _parse_metric(obj: Any, path: str) -> MetricDefinition:
    if not isinstance(obj, dict):
        raise InvalidConfig("metric must be an object", path)
    _reject_unknown(obj, _METRIC_KEYS, path)
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise MissingField("metric needs a nonempty 'name'", f"{path}.name")
    try:
        kind = MetricKind(obj.get("kind"))
    except ValueError:
        valid = ", ".join(k.value for k in MetricKind)
        raise UnknownKind(f"unknown metric kind {obj.get('kind')!r} (expected one of {valid})", f"{path}.kind") from None
    lsl = _number(obj["lsl"], f"{path}.lsl") if obj.get("lsl") is not None else None
    usl = _number(obj["usl"], f"{path}.usl") if obj.get("usl") is not None else None
    label = obj.get("positive_label")
    if label is not None and not isinstance(label, str):
        raise InvalidConfig("positive_label must be a string", f"{path}.positive_label")
    try:
        return MetricDefinition(name, kind, SpecificationLimits(lsl, usl), label)
    except SCFCError as exc:
        raise type(exc)(exc.message, path) from None


def parse_spec(source: str | IO[str]) -> EvaluationSpec:
    """Parse the evaluation-spec JSON config, applying defaults."""
    obj = _load_object(source, "spec")
    _reject_unknown(obj, _SPEC_KEYS, "$")
    metrics_raw = obj.get("metrics")
    if not isinstance(metrics_raw, list) or not metrics_raw:
        raise MissingField("'metrics' must be a nonempty list", "$.metrics")
    metrics = tuple(_parse_metric(m, f"$.metrics[{i}]") for i, m in enumerate(metrics_raw))
    kwargs: dict[str, Any] = {}
    if "confidence_level" in obj:
        kwargs["confidence_level"] = _number(obj["confidence_level"], "$.confidence_level")
    for key in ("resamples", "seed", "resample_size"):
        if obj.get(key) is not None:
            kwargs[key] = _integer(obj[key], f"$.{key}")
    try:
        return EvaluationSpec(metrics, **kwargs)
    except SCFCError as exc:
        raise type(exc)(exc.message, "$") from None
