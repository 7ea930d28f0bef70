from __future__ import annotations

from pathlib import Path

import pytest

from scfc.ingest import EvaluationRecord, OutcomeKind, RecordSet

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def correctness_set(flags, strata=None) -> RecordSet:
    keys = tuple(strata[0]) if strata else ()
    recs = [
        EvaluationRecord(f"r{i}", dict(strata[i]) if strata else {}, correct=bool(f))
        for i, f in enumerate(flags)
    ]
    return RecordSet(tuple(recs), OutcomeKind.CORRECTNESS, keys)


def classification_set(pairs) -> RecordSet:
    recs = [EvaluationRecord(f"r{i}", {}, actual=a, predicted=p) for i, (a, p) in enumerate(pairs)]
    return RecordSet(tuple(recs), OutcomeKind.CLASSIFICATION)


def expand_counts(tp, fp, tn, fn, positive="fraud", negative="legit") -> RecordSet:
    pairs = (
        [(positive, positive)] * tp
        + [(negative, positive)] * fp
        + [(negative, negative)] * tn
        + [(positive, negative)] * fn
    )
    return classification_set(pairs)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    key = f"AC{number:02d}"
    if report.when == "call" or (report.when == "setup" and report.failed):
        status = "PASS" if report.passed else "FAIL"
        prev = _acceptance.get(key)
        if prev is None or prev[0] == "PASS":
            _acceptance[key] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance):
        status, title = _acceptance[key]
        terminalreporter.write_line(f"{status} {key} {title}")
