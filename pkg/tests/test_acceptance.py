"""Acceptance suite: one test per criterion, each tagged with its number.

The terminal summary prints a PASS/FAIL line per criterion.
"""

import json
import math
import random
from fractions import Fraction

import pytest

from conftest import FIXTURES, expand_counts
from scfc.bootstrap import BootstrapConfig, BootstrapDistribution, bootstrap_counts, bootstrap_records, percentile_ci
from scfc.capability import Verdict, classify_verdict, combine_cpk, cpl, cpu
from scfc.cli import main
from scfc.ingest import ConfusionCounts, EvaluationRecord, MetricDefinition, MetricKind, OutcomeKind, RecordSet, SpecificationLimits
from scfc.metrics import MetricStatistic, classification_metric, confusion_from_records
from scfc.sampling import Stratum, allocate, derive_strata, draw_sample, plan_sample, representativeness_report
from test_sampling import brute_force_apportionment


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.acceptance(1, "case study 1 end-to-end reproduction")
def test_ac01_case1_end_to_end(capsys, tmp_path):
    report = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys, "evaluate", "--records", FIXTURES / "case1_records.csv", "--spec", FIXTURES / "case1_spec.json",
        "--out", report, "--no-timestamp",
    )
    doc = json.loads(report.read_text())
    (m,) = doc["metrics"]
    rows = (FIXTURES / "case1_records.csv").read_text().splitlines()[1:]
    assert len(rows) == 42 and sum(r.endswith(",1") or r.endswith(",true") for r in rows) == 35
    assert doc["run"]["resamples"] == 1000 and m["limits"]["lsl"] == 0.70
    assert m["point_estimate"] == float(f"{35 / 42:.6g}")
    assert 0.8233 <= m["bootstrap_mean"] <= 0.8433
    assert 0.690 <= m["ci"]["lower"] <= 0.738
    assert 0.904 <= m["ci"]["upper"] <= 0.952
    assert 0.97 <= m["cpk"] <= 1.27
    assert m["verdict"] == doc["overall"]["verdict"] == "capable"
    assert out.splitlines()[-1].startswith("SCFC verdict: Capable")
    assert code == 0


@pytest.mark.acceptance(1, "case study 1 end-to-end reproduction")
def test_ac01_point_estimate_exact():
    from scfc.ingest import RecordFormat, parse_records
    from scfc.metrics import proportion_correct

    rs = parse_records((FIXTURES / "case1_records.csv").read_text(), RecordFormat.CSV)
    assert proportion_correct(rs).value == 35 / 42


@pytest.mark.acceptance(2, "case study 2 capability from published statistics")
def test_ac02_case2_capability(capsys):
    code, out, _ = run_cli(capsys, "capability", "--mean", "0.9911", "--lsl", "0.98", "--ci-lower", "0.9855")
    cpk = float(next(line for line in out.splitlines() if line.startswith("cpk:")).split()[1])
    assert cpk == pytest.approx(1.9821, abs=0.005)
    assert "Capable" in out.splitlines()[-1]
    assert code == 0


@pytest.mark.acceptance(3, "metric oracle on the confusion matrix")
def test_ac03_metric_oracle():
    table1 = ConfusionCounts(tp=8951, fp=10365, tn=109269288, fn=82)
    expected = {
        MetricKind.RECALL: Fraction(8951, 9033),
        MetricKind.PRECISION: Fraction(8951, 19316),
        MetricKind.FALSE_POSITIVE_RATE: Fraction(10365, 109279653),
    }
    for kind, exact in expected.items():
        assert classification_metric(table1, kind).value == float(exact)
    assert round(float(expected[MetricKind.RECALL]), 5) == 0.99092

    # down-scaled matrix, metric by direct record iteration
    scaled = {k: round(v / 1000) for k, v in {"tp": 8951, "fp": 10365, "tn": 109269288, "fn": 82}.items()}
    assert scaled == {"tp": 9, "fp": 10, "tn": 109269, "fn": 0}
    records = expand_counts(**scaled)
    tp = sum(r.actual == "fraud" and r.predicted == "fraud" for r in records)
    fp = sum(r.actual != "fraud" and r.predicted == "fraud" for r in records)
    tn = sum(r.actual != "fraud" and r.predicted != "fraud" for r in records)
    fn = sum(r.actual == "fraud" and r.predicted != "fraud" for r in records)
    oracle = {
        MetricKind.RECALL: Fraction(tp, tp + fn),
        MetricKind.PRECISION: Fraction(tp, tp + fp),
        MetricKind.FALSE_POSITIVE_RATE: Fraction(fp, fp + tn),
    }
    counts = confusion_from_records(records, "fraud")
    for kind, exact in oracle.items():
        assert classification_metric(counts, kind).value == float(exact)
        assert MetricStatistic(MetricDefinition("m", kind, SpecificationLimits(0.0), "fraud"))(records) == float(exact)


@pytest.mark.acceptance(4, "percentile-method oracle")
def test_ac04_percentile_oracle():
    values = tuple(i / 1000 for i in range(1, 1001))
    dist = BootstrapDistribution(values, values, math.fsum(values) / 1000, BootstrapConfig(resamples=1000))
    ci = percentile_ci(dist, 0.95)
    assert (ci.lower, ci.upper) == (0.025, 0.975)
    assert (values.index(ci.lower) + 1, values.index(ci.upper) + 1) == (25, 975)


@pytest.mark.acceptance(5, "aggregate and record paths agree")
def test_ac05_counts_records_equivalence():
    counts = ConfusionCounts(tp=30, fp=8, tn=50, fn=12)
    records = expand_counts(30, 8, 50, 12)
    assert len(records) == 100
    cfg = BootstrapConfig(resamples=5000, confidence_level=0.95, seed=0)
    a = percentile_ci(bootstrap_counts(counts, MetricKind.RECALL, cfg))
    stat = MetricStatistic(MetricDefinition("recall", MetricKind.RECALL, SpecificationLimits(0.5), "fraud"))
    b = percentile_ci(bootstrap_records(records, stat, cfg))
    assert a.level == b.level
    assert abs(a.lower - b.lower) <= 0.02
    assert abs(a.upper - b.upper) <= 0.02


@pytest.mark.acceptance(6, "determinism and parallelism invariance")
def test_ac06_determinism(capsys, tmp_path):
    def report(workers, i):
        out = tmp_path / f"r{workers}-{i}.json"
        run_cli(
            capsys, "evaluate", "--records", FIXTURES / "case1_records.csv", "--spec", FIXTURES / "case1_spec.json",
            "--out", out, "--no-timestamp", "--workers", workers,
        )
        return out.read_bytes()

    serial = report(1, 0)
    assert report(0, 0) == serial
    assert {report(1, i) for i in range(1, 21)} == {serial}


@pytest.mark.acceptance(7, "capability property suite")
def test_ac07_capability_properties():
    rnd = random.Random(2024)
    for _ in range(50):
        mean = rnd.uniform(-5, 5)
        lo, hi = mean - rnd.uniform(0.01, 2), mean + rnd.uniform(0.01, 2)
        lsl, usl = mean - rnd.uniform(-1, 3), mean + rnd.uniform(-1, 3)
        a, b = rnd.uniform(0.1, 10), rnd.uniform(-10, 10)

        def f(x):
            return a * x + b

        base = (cpl(mean, lsl, lo).value, cpu(mean, usl, hi).value)
        mapped = (cpl(f(mean), f(lsl), f(lo)).value, cpu(f(mean), f(usl), f(hi)).value)
        for x, y in zip(base, mapped):
            assert y == pytest.approx(x, rel=1e-9, abs=1e-12)
        assert combine_cpk(*mapped) == pytest.approx(combine_cpk(*base), rel=1e-9, abs=1e-12)

    # sign rule at the limit
    assert cpl(0.9, 0.9, 0.85).value == 0.0
    assert cpu(0.10, 0.10, 0.12).value == 0.0
    assert cpl(0.9, 0.9, 0.9).value == math.inf and cpl(0.9, 0.9, 0.9).degenerate

    # min and absent-side rules
    assert combine_cpk(1.12, None) == 1.12
    assert combine_cpk(1.5, 1.2) == combine_cpk(1.2, 1.5) == 1.2
    assert combine_cpk(None, 2.0) == 2.0

    boundaries = {0.999999: Verdict.UNACCEPTABLE, 1.0: Verdict.CAPABLE, 1.999999: Verdict.CAPABLE, 2.0: Verdict.EXCELLENT}
    for cpk, verdict in boundaries.items():
        assert classify_verdict(cpk) is verdict


def _population(rnd, sizes):
    recs = []
    for s, count in enumerate(sizes):
        recs += [EvaluationRecord(f"s{s}-{j}", {"g": f"G{s}"}, correct=rnd.random() < 0.8) for j in range(count)]
    rnd.shuffle(recs)
    return RecordSet(tuple(recs), OutcomeKind.CORRECTNESS, ("g",))


@pytest.mark.acceptance(8, "sampling suite")
def test_ac08_sampling():
    rnd = random.Random(8)
    for _ in range(200):
        k = rnd.randint(1, 4)
        weights = [rnd.randint(0, 15) for _ in range(k)]
        if not any(weights):
            weights[0] = 1
        n = rnd.randint(0, 12)
        total = sum(weights)
        strata = [Stratum((("g", f"G{i}"),), 10**6, w / total) for i, w in enumerate(weights)]
        got = [a.allocated for a in allocate(strata, n)]
        assert sum(got) == n
        assert got == brute_force_apportionment(weights, n)

    for trial in range(40):
        pop = _population(rnd, [rnd.randint(1, 30) for _ in range(rnd.randint(1, 4))])
        size = rnd.randint(1, len(pop))
        observed = {s.key: s.proportion for s in derive_strata(pop, ["g"])}
        sample = draw_sample(pop, plan_sample(pop, ["g"], size, seed=trial, external_proportions=observed))
        ids = [r.id for r in sample]
        assert len(ids) == len(set(ids)) == size
        assert representativeness_report(sample, pop, ["g"]).max_deviation <= 1 / size + 1e-12


@pytest.mark.acceptance(9, "degenerate zero-width interval handling")
def test_ac09_degenerate(capsys, tmp_path):
    report = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys, "evaluate", "--records", FIXTURES / "all_correct_20.csv", "--spec", FIXTURES / "lsl090_spec.json",
        "--out", report, "--no-timestamp",
    )
    doc = json.loads(report.read_text())
    (m,) = doc["metrics"]
    assert doc["run"]["sample_size"] == 20 and m["limits"]["lsl"] == 0.9
    assert m["ci"]["lower"] == m["ci"]["upper"] == 1.0
    assert m["cpk"] == "inf" and m["degenerate"] is True
    assert m["verdict"] == doc["overall"]["verdict"] == "excellent"
    assert any("degenerate" in w for w in doc["warnings"])
    assert code == 0


@pytest.mark.acceptance(10, "gate exit codes")
def test_ac10_gate_semantics(capsys):
    code, out, _ = run_cli(
        capsys, "evaluate", "--records", FIXTURES / "gate_fail_records.csv", "--spec", FIXTURES / "case1_spec.json",
    )
    assert "Unacceptable" in out.splitlines()[-1]
    assert code == 1
    code, _, err = run_cli(
        capsys, "evaluate", "--records", FIXTURES / "malformed.csv", "--spec", FIXTURES / "case1_spec.json",
    )
    assert err.startswith("error:")
    assert code == 2
