"""Exception hierarchy.

Every error raised while parsing or validating input derives from
:class:`SCFCError` and carries an optional ``location`` (a line number or a
JSON path) so diagnostics can point at the offending input.
"""

from __future__ import annotations


class SCFCError(ValueError):
    """Base class for all user-facing errors."""

    def __init__(self, message: str, location: str | int | None = None) -> None:
        self.message = message
        self.location = location
        super().__init__(self._format())

    def _format(self) -> str:
        if self.location is None:
            return self.message
        if isinstance(self.location, int):
            return f"line {self.location}: {self.message}"
        return f"{self.location}: {self.message}"


# ingestion
class AmbiguousOutcome(SCFCError):
    pass


class MissingOutcome(SCFCError):
    pass


class DuplicateId(SCFCError):
    pass


class InconsistentStrataKeys(SCFCError):
    pass


class MalformedRow(SCFCError):
    pass


class MissingField(SCFCError):
    pass


class NegativeCount(SCFCError):
    pass


class AllZero(SCFCError):
    pass


class NoLimits(SCFCError):
    pass


class InvertedLimits(SCFCError):
    pass


class LimitOutOfRange(SCFCError):
    pass


class UnknownKind(SCFCError):
    pass


class MissingPositiveLabel(SCFCError):
    pass


class InvalidConfig(SCFCError):
    pass


# metrics
class WrongOutcomeKind(SCFCError):
    pass


class UndefinedMetric(SCFCError):
    """A metric whose denominator population is empty."""

    def __init__(self, message: str, denominator: str, location=None) -> None:
        self.denominator = denominator
        super().__init__(message, location)


class EmptyRecordSet(SCFCError):
    pass


class NonFiniteValue(SCFCError):
    pass


# sampling
class UnknownStratumKey(SCFCError):
    pass


class ProportionsDoNotSum(SCFCError):
    pass


class InfeasibleAllocation(SCFCError):
    pass


# bootstrap
class UndefinedOnResample(SCFCError):
    pass


# capability
class InvalidOrder(SCFCError):
    pass


class NoIndices(SCFCError):
    pass


# report
class MissingMetricResult(SCFCError):
    pass
