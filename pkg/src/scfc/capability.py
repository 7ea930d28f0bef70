"""Capability indices against specification limits.

Variability is measured as the distance from the bootstrap mean to the
relevant confidence bound, not as a standard deviation:

    Cpl = (mean - LSL) / (mean - CI lower)
    Cpu = (USL - mean) / (CI upper - mean)
    Cpk = min(Cpl, Cpu), an absent side counting as +inf

A zero-width side (denominator <= ``EPS``) yields a signed infinity and is
flagged degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .bootstrap import ConfidenceInterval
from .errors import InvalidOrder, NoIndices
from .ingest import SpecificationLimits

EPS = 1e-12


class Verdict(str, Enum):
    UNACCEPTABLE = "unacceptable"
    CAPABLE = "capable"
    EXCELLENT = "excellent"

    @property
    def label(self) -> str:
        return self.value.capitalize()

    @property
    def note(self) -> str:
        return _NOTES[self]

    @property
    def passes(self) -> bool:
        return self is not Verdict.UNACCEPTABLE


_NOTES = {
    Verdict.UNACCEPTABLE: "does not consistently meet the specification; do not deploy",
    Verdict.CAPABLE: "meets the specification; deploy with monitoring",
    Verdict.EXCELLENT: "meets the specification with a wide safety margin",
}


@dataclass(frozen=True)
class IndexValue:
    value: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def _index(numerator: float, spread: float) -> IndexValue:
    if spread > EPS:
        return IndexValue(numerator / spread)
    return IndexValue(math.inf if numerator >= 0 else -math.inf, degenerate=True)


def cpl(mean: float, lsl: float, ci_lower: float) -> IndexValue:
    if ci_lower > mean + EPS:
        raise InvalidOrder(f"CI lower bound {ci_lower} is above the mean {mean}")
    return _index(mean - lsl, mean - ci_lower)


def cpu(mean: float, usl: float, ci_upper: float) -> IndexValue:
    if ci_upper < mean - EPS:
        raise InvalidOrder(f"CI upper bound {ci_upper} is below the mean {mean}")
    return _index(usl - mean, ci_upper - mean)


def _as_float(x: IndexValue | float | None) -> float | None:
    return None if x is None else float(x)


def combine_cpk(cpl: IndexValue | float | None = None, cpu: IndexValue | float | None = None) -> float:
    present = [v for v in (_as_float(cpl), _as_float(cpu)) if v is not None]
    if not present:
        raise NoIndices("need at least one of cpl/cpu")
    return min(present)


def classify_verdict(cpk: float) -> Verdict:
    if cpk >= 2.0:
        return Verdict.EXCELLENT
    if cpk >= 1.0:
        return Verdict.CAPABLE
    # includes -inf and nan
    return Verdict.UNACCEPTABLE


@dataclass(frozen=True)
class CapabilityResult:
    mean: float
    ci: ConfidenceInterval
    limits: SpecificationLimits
    cpl: IndexValue | None
    cpu: IndexValue | None
    cpk: float
    degenerate: bool
    verdict: Verdict


def assess_capability(mean: float, ci: ConfidenceInterval, limits: SpecificationLimits) -> CapabilityResult:
    """Compute every applicable index and the verdict for one metric."""
    lower = cpl(mean, limits.lsl, ci.lower) if limits.lsl is not None else None
    upper = cpu(mean, limits.usl, ci.upper) if limits.usl is not None else None
    cpk = combine_cpk(lower, upper)
    # the governing side is whichever index equals cpk
    governing = [ix for ix in (lower, upper) if ix is not None and ix.value == cpk]
    degenerate = any(ix.degenerate for ix in governing)
    return CapabilityResult(mean, ci, limits, lower, upper, cpk, degenerate, classify_verdict(cpk))
