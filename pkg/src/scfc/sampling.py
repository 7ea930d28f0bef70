"""Stratified, seeded selection of a test sample from a record population."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InfeasibleAllocation, ProportionsDoNotSum, UnknownStratumKey
from .ingest import RecordSet
from .rng import label_key, substream

StratumKey = tuple[tuple[str, str], ...]

PROPORTION_TOL = 1e-9
# remainders closer than this are treated as tied
_SNAP = 1e-9


def stratum_label(key: StratumKey) -> str:
    if not key:
        return "(all)"
    return ",".join(f"{k}={v}" for k, v in key)


@dataclass(frozen=True)
class Stratum:
    key: StratumKey
    count: int
    proportion: float

    @property
    def label(self) -> str:
        return stratum_label(self.key)


@dataclass(frozen=True)
class StratumAllocation:
    stratum_key: StratumKey
    target_proportion: float
    allocated: int
    available: int
    capped: bool = False

    @property
    def label(self) -> str:
        return stratum_label(self.stratum_key)


@dataclass(frozen=True)
class SamplingPlan:
    strata_keys: tuple[str, ...]
    allocations: tuple[StratumAllocation, ...]
    seed: int
    requested_size: int

    @property
    def size(self) -> int:
        return sum(a.allocated for a in self.allocations)

    @property
    def infeasible(self) -> bool:
        """True when some stratum could not supply its quota and seats moved."""
        return any(a.capped for a in self.allocations)


def _check_keys(records: RecordSet, strata_keys: Sequence[str]) -> None:
    missing = [k for k in strata_keys if k not in records.strata_keys]
    if missing:
        have = ", ".join(records.strata_keys) or "none"
        raise UnknownStratumKey(f"unknown stratum key(s) {', '.join(missing)} (available: {have})")


def _key_of(record, strata_keys: Sequence[str]) -> StratumKey:
    return tuple((k, record.strata[k]) for k in strata_keys)


def _members(records: RecordSet, strata_keys: Sequence[str]) -> dict[StratumKey, list[int]]:
    groups: dict[StratumKey, list[int]] = {}
    for i, rec in enumerate(records):
        groups.setdefault(_key_of(rec, strata_keys), []).append(i)
    return groups


def derive_strata(population: RecordSet, strata_keys: Sequence[str]) -> list[Stratum]:
    """Distinct attribute combinations, in order of first appearance."""
    _check_keys(population, strata_keys)
    total = len(population)
    return [
        Stratum(key, len(idx), len(idx) / total if total else 0.0)
        for key, idx in _members(population, strata_keys).items()
    ]


def largest_remainder(weights: Sequence[float], n: int, order: Sequence[StratumKey] | None = None) -> list[int]:
    """Hamilton apportionment of ``n`` seats proportional to ``weights``.

    Floors of the quotas first; leftover seats go to the largest fractional
    remainders, ties broken by ascending ``order`` (default: position).
    """
    total = math.fsum(weights)
    if n == 0 or total <= 0:
        return [0] * len(weights)
    quotas = [n * w / total for w in weights]
    floors = [max(0, math.floor(q + _SNAP)) for q in quotas]
    remainders = [round(max(0.0, q - f), 9) for q, f in zip(quotas, floors)]
    order = list(order) if order is not None else list(range(len(weights)))
    ranking = sorted(range(len(weights)), key=lambda i: (-remainders[i], order[i]))
    seats = floors[:]
    leftover = n - sum(floors)
    for i in ranking[: max(0, leftover)]:
        seats[i] += 1
    return seats


def allocate(
    strata: Sequence[Stratum],
    n: int,
    external_proportions: Mapping[StratumKey, float] | None = None,
) -> list[StratumAllocation]:
    """Split ``n`` sample slots across strata.

    Observed proportions are used unless ``external_proportions`` is given.
    If a stratum cannot supply its seats, it gives all it has and the
    shortfall is re-apportioned over the strata with spare records; those
    allocations are marked ``capped``.
    """
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    available = {s.key: s.count for s in strata}
    if external_proportions is None:
        props = {s.key: s.proportion for s in strata}
    else:
        props = {s.key: 0.0 for s in strata}
        for key, p in external_proportions.items():
            if not (p >= 0.0 and math.isfinite(p)):
                raise ProportionsDoNotSum(f"proportion for {stratum_label(key)} is invalid ({p!r})")
            props[key] = float(p)
            available.setdefault(key, 0)
    total = math.fsum(props.values())
    if abs(total - 1.0) > PROPORTION_TOL:
        raise ProportionsDoNotSum(f"proportions sum to {total!r}, expected 1")

    keys = sorted(props)
    weights = [props[k] for k in keys]
    caps = [available[k] for k in keys]
    target = min(n, sum(caps))
    seats = largest_remainder(weights, target, keys)
    capped = [False] * len(keys)
    while True:
        over = [i for i in range(len(keys)) if seats[i] > caps[i]]
        if not over:
            break
        shortfall = 0
        for i in over:
            shortfall += seats[i] - caps[i]
            seats[i] = caps[i]
            capped[i] = True
        spare = [i for i in range(len(keys)) if seats[i] < caps[i]]
        if not spare:
            break
        w = [weights[i] for i in spare]
        if math.fsum(w) <= 0:
            w = [caps[i] - seats[i] for i in spare]
        for i, extra in zip(spare, largest_remainder(w, shortfall, [keys[i] for i in spare])):
            seats[i] += extra

    by_key = {k: StratumAllocation(k, weights[i], seats[i], caps[i], capped[i]) for i, k in enumerate(keys)}
    # observed strata keep first-appearance order; external-only strata follow
    observed = [s.key for s in strata]
    extra = [k for k in keys if k not in set(observed)]
    return [by_key[k] for k in observed + extra]


def plan_sample(
    population: RecordSet,
    strata_keys: Sequence[str],
    size: int,
    seed: int,
    external_proportions: Mapping[StratumKey, float] | None = None,
) -> SamplingPlan:
    strata = derive_strata(population, strata_keys)
    allocations = allocate(strata, size, external_proportions)
    return SamplingPlan(tuple(strata_keys), tuple(allocations), seed, size)


def draw_sample(population: RecordSet, plan: SamplingPlan) -> RecordSet:
    """Select ``allocated`` records per stratum, uniformly without replacement.

    Each stratum draws from its own substream keyed on (seed, stratum label),
    so results do not depend on stratum processing order. The sample keeps
    the population's record order.
    """
    _check_keys(population, plan.strata_keys)
    groups = _members(population, plan.strata_keys)
    chosen: list[int] = []
    for alloc in plan.allocations:
        members = groups.get(alloc.stratum_key, [])
        if alloc.allocated > len(members):
            raise InfeasibleAllocation(
                f"stratum {alloc.label} needs {alloc.allocated} records but has {len(members)}"
            )
        if alloc.allocated == 0:
            continue
        rng = substream(plan.seed, *label_key(alloc.stratum_key))
        picks = rng.choice(len(members), size=alloc.allocated, replace=False)
        chosen.extend(members[int(j)] for j in picks)
    return population.subset(sorted(chosen))


@dataclass(frozen=True)
class StratumDeviation:
    stratum_key: StratumKey
    population_proportion: float
    sample_proportion: float
    absolute_deviation: float

    @property
    def label(self) -> str:
        return stratum_label(self.stratum_key)


@dataclass(frozen=True)
class RepresentativenessReport:
    rows: tuple[StratumDeviation, ...]

    @property
    def max_deviation(self) -> float:
        return max((r.absolute_deviation for r in self.rows), default=0.0)

    @property
    def worst(self) -> StratumDeviation | None:
        if not self.rows:
            return None
        return max(self.rows, key=lambda r: r.absolute_deviation)

    def render(self) -> str:
        worst = self.worst
        lines = ["stratum\tpopulation\tsample\tdeviation"]
        for r in self.rows:
            mark = "  <- max" if r is worst else ""
            lines.append(
                f"{r.label}\t{r.population_proportion:.4f}\t{r.sample_proportion:.4f}\t{r.absolute_deviation:.4f}{mark}"
            )
        return "\n".join(lines)


def representativeness_report(
    sample: RecordSet, population: RecordSet, strata_keys: Sequence[str]
) -> RepresentativenessReport:
    _check_keys(population, strata_keys)
    _check_keys(sample, strata_keys)
    pop = _members(population, strata_keys)
    smp = _members(sample, strata_keys)
    keys = list(pop) + [k for k in smp if k not in pop]
    n_pop, n_smp = len(population), len(sample)
    rows = []
    for k in keys:
        p = len(pop.get(k, ())) / n_pop if n_pop else 0.0
        s = len(smp.get(k, ())) / n_smp if n_smp else 0.0
        rows.append(StratumDeviation(k, p, s, abs(p - s)))
    return RepresentativenessReport(tuple(rows))

