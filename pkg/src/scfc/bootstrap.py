"""Nonparametric bootstrap and percentile confidence intervals.

Resample ``i`` always draws from ``substream(seed, i)``, so the distribution
is identical no matter how many worker threads evaluate it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyRecordSet, InvalidConfig, UndefinedMetric, UndefinedOnResample
from .ingest import ConfusionCounts, MetricKind, RecordSet
from .metrics import MetricStatistic, Statistic, classification_metric
from .rng import substream

_RANK_SNAP = 9


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 1000
    resample_size: int | None = None
    confidence_level: float = 0.95
    seed: int = 0

    def __post_init__(self) -> None:
        if self.resamples < 1:
            raise InvalidConfig(f"resamples must be positive, got {self.resamples}")
        if self.resample_size is not None and self.resample_size < 1:
            raise InvalidConfig(f"resample_size must be >= 1, got {self.resample_size}")
        if not 0.0 < self.confidence_level < 1.0:
            raise InvalidConfig(f"confidence_level must be in (0, 1), got {self.confidence_level}")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class BootstrapDistribution:
    values: tuple[float, ...]  # ascending
    raw: tuple[float, ...]  # resample order, for audit
    mean: float
    config: BootstrapConfig  # resample_size always resolved

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def resolve_workers(workers: int | None) -> int:
    """``None`` or ``0`` means one worker per CPU."""
    if not workers:
        return os.cpu_count() or 1
    if workers < 0:
        raise InvalidConfig(f"workers must be nonnegative, got {workers}")
    return workers


_DIAGNOSTIC = (
    "a resample left the metric's denominator empty; "
    "resampling within strata (e.g. per class) or bootstrapping aggregate counts avoids this"
)


def _run(one: Callable[[int], float], resamples: int, workers: int | None) -> list[float]:
    def chunk(bounds: tuple[int, int]) -> tuple[list[float], UndefinedOnResample | None]:
        out = []
        for i in range(*bounds):
            try:
                out.append(one(i))
            except UndefinedMetric as exc:
                return out, UndefinedOnResample(f"resample {i}: {exc.message}; {_DIAGNOSTIC}")
        return out, None

    n_workers = min(resolve_workers(workers), resamples)
    if n_workers == 1:
        parts = [chunk((0, resamples))]
    else:
        edges = np.linspace(0, resamples, n_workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(chunk, zip(edges[:-1], edges[1:])))
    values: list[float] = []
    for part, err in parts:
        if err is not None:
            raise err
        values.extend(part)
    return values


def _distribution(raw: list[float], config: BootstrapConfig) -> BootstrapDistribution:
    return BootstrapDistribution(
        values=tuple(sorted(raw)),
        raw=tuple(raw),
        mean=math.fsum(raw) / len(raw),
        config=config,
    )


def bootstrap_records(
    records: RecordSet,
    statistic: Statistic | MetricStatistic,
    config: BootstrapConfig = BootstrapConfig(),
    *,
    workers: int | None = 1,
) -> BootstrapDistribution:
    """Bootstrap ``statistic`` by resampling records with replacement.

    ``statistic`` is either a :class:`MetricStatistic` (fast path on encoded
    arrays) or any callable taking a list of records.
    """
    if not len(records):
        raise EmptyRecordSet("cannot bootstrap an empty record set")
    size = config.resample_size or len(records)
    config = replace(config, resample_size=size)
    population = len(records)

    if isinstance(statistic, MetricStatistic):
        encoded = statistic.encode(records)

        def evaluate(idx: np.ndarray) -> float:
            return statistic.on_indices(encoded, idx)

    else:

        def evaluate(idx: np.ndarray) -> float:
            return float(statistic(records.take(idx.tolist())))

    def one(i: int) -> float:
        idx = substream(config.seed, i).integers(0, population, size=size)
        return evaluate(idx)

    return _distribution(_run(one, config.resamples, workers), config)


def bootstrap_counts(
    counts: ConfusionCounts,
    kind: MetricKind | str,
    config: BootstrapConfig = BootstrapConfig(),
    *,
    workers: int | None = 1,
) -> BootstrapDistribution:
    """Bootstrap a classification metric from aggregate confusion counts.

    Each resample draws (tp, fp, tn, fn) from a multinomial over the observed
    cell proportions, which has the same law as resampling the expanded
    records one by one.
    """
    kind = MetricKind(kind)
    classification_metric(counts, kind)  # observed data must support the metric
    size = config.resample_size or counts.total
    config = replace(config, resample_size=size)
    cells = np.asarray(counts.as_tuple(), dtype=np.int64)
    probs = cells / counts.total

    def one(i: int) -> float:
        tp, fp, tn, fn = (int(c) for c in substream(config.seed, i).multinomial(size, probs))
        return classification_metric(ConfusionCounts(tp, fp, tn, fn), kind).value

    return _distribution(_run(one, config.resamples, workers), config)


def nearest_rank(q: float, n: int) -> int:
    """1-based nearest-rank index ``ceil(q * n)``, clamped to ``[1, n]``.

    ``q * n`` is snapped to 9 decimals first so that e.g. 0.025 * 1000 is
    rank 25 despite binary rounding of 1 - 0.95.
    """
    return min(n, max(1, math.ceil(round(q * n, _RANK_SNAP))))


def percentile_ci(dist: BootstrapDistribution | Sequence[float], level: float | None = None) -> ConfidenceInterval:
    """Percentile interval from the empirical distribution's order statistics."""
    if isinstance(dist, BootstrapDistribution):
        values = dist.values
        if level is None:
            level = dist.config.confidence_level
    else:
        values = tuple(sorted(dist))
    if level is None:
        level = 0.95
    if not values:
        raise EmptyRecordSet("empty bootstrap distribution")
    if not 0.0 < level < 1.0:
        raise InvalidConfig(f"confidence level must be in (0, 1), got {level}")
    alpha = 1.0 - level
    s = len(values)
    lower = values[nearest_rank(alpha / 2, s) - 1]
    upper = values[nearest_rank(1 - alpha / 2, s) - 1]
    return ConfidenceInterval(lower, upper, level)


def dump_distribution(dist: BootstrapDistribution) -> str:
    """Single-column CSV of the raw values in resample order, full precision."""
    return "value\n" + "".join(f"{v!r}\n" for v in dist.raw)
