"""Command-line quality gate.

Exit status: 0 when the overall verdict passes, 1 when it is Unacceptable,
2 on any usage or data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .bootstrap import dump_distribution
from .capability import Verdict, classify_verdict, combine_cpk, cpl, cpu
from .errors import InvalidConfig, SCFCError
from .ingest import format_for_path, parse_counts, parse_records, parse_spec, render_records
from .pipeline import evaluate_counts, evaluate_records
from .report import format_value, render_json, render_markdown, verdict_line
from .sampling import StratumKey, draw_sample, plan_sample, representativeness_report

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
SEED_ENV = "SCFC_SEED"


def _exit_for(verdict: Verdict, strict: bool) -> int:
    if strict:
        return EXIT_PASS if verdict is Verdict.EXCELLENT else EXIT_FAIL
    return EXIT_PASS if verdict.passes else EXIT_FAIL


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise InvalidConfig(f"{SEED_ENV}={raw!r} is not an integer") from None
    if seed < 0:
        raise InvalidConfig(f"{SEED_ENV} must be nonnegative")
    return seed


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _strata_list(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [k.strip() for k in raw.split(",") if k.strip()]


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args: argparse.Namespace) -> int:
    spec = parse_spec(_read_text(args.spec))
    seed = args.seed if args.seed is not None else _env_seed()
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if args.resamples is not None:
        overrides["resamples"] = args.resamples
    if overrides:
        try:
            spec = replace(spec, **overrides)
        except SCFCError as exc:
            raise type(exc)(exc.message, "command line") from None

    timestamp = None if args.no_timestamp else datetime.now(timezone.utc).isoformat(timespec="seconds")
    warnings: list[str] = []
    if args.counts:
        if args.sample_size is not None:
            raise InvalidConfig("--sample-size requires --records")
        counts = parse_counts(_read_text(args.counts))
        report = evaluate_counts(counts, spec, workers=args.workers, timestamp=timestamp)
    else:
        records = parse_records(_read_text(args.records), args.records_format or format_for_path(args.records))
        if args.sample_size is not None:
            plan = plan_sample(records, _strata_list(args.strata), args.sample_size, spec.seed)
            if plan.infeasible:
                warnings.append(_infeasible_warning(plan))
            records = draw_sample(records, plan)
        report = evaluate_records(records, spec, workers=args.workers, timestamp=timestamp, warnings=warnings)

    outputs = []
    if args.format in ("json", "both"):
        outputs.append((".json", render_json(report)))
    if args.format in ("markdown", "both"):
        outputs.append((".md", render_markdown(report)))
    if args.out:
        out = Path(args.out)
        if len(outputs) == 1:
            _write_text(out, outputs[0][1])
        else:
            for suffix, text in outputs:
                _write_text(out.with_suffix(suffix), text)
    else:
        for _, text in outputs:
            sys.stdout.write(text)

    if args.dump_distribution:
        target = Path(args.dump_distribution)
        single = len(report.per_metric) == 1
        for r in report.per_metric:
            path = target if single else target.with_name(f"{target.stem}-{r.definition.name}{target.suffix or '.csv'}")
            _write_text(path, dump_distribution(r.distribution))

    print(verdict_line(report))
    return _exit_for(report.overall_verdict, args.strict)


# ---------------------------------------------------------------------------
# sample


def _infeasible_warning(plan) -> str:
    capped = ", ".join(f"{a.label} (available {a.available})" for a in plan.allocations if a.capped)
    return f"allocation infeasible for {capped}; shortfall redistributed"


def parse_proportions(text: str, strata_keys: Sequence[str]) -> dict[StratumKey, float]:
    """External stratum proportions.

    Either ``{"proportions": [{"stratum": {"region": "EU"}, "proportion": 0.6}, ...]}``
    or, with a single stratum key, the shorthand ``{"EU": 0.6, ...}``.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"invalid proportions JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(obj, dict):
        raise InvalidConfig("proportions must be a JSON object", "$")
    result: dict[StratumKey, float] = {}

    def number(v, path):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InvalidConfig(f"proportion must be a number, got {v!r}", path)
        return float(v)

    if "proportions" in obj:
        if set(obj) != {"proportions"} or not isinstance(obj["proportions"], list):
            raise InvalidConfig("expected {'proportions': [...]}", "$")
        for i, entry in enumerate(obj["proportions"]):
            path = f"$.proportions[{i}]"
            if not isinstance(entry, dict) or set(entry) != {"stratum", "proportion"}:
                raise InvalidConfig("entry needs exactly 'stratum' and 'proportion'", path)
            stratum = entry["stratum"]
            if not isinstance(stratum, dict) or set(stratum) != set(strata_keys):
                raise InvalidConfig(f"stratum must give values for {list(strata_keys)}", f"{path}.stratum")
            key = tuple((k, str(stratum[k])) for k in strata_keys)
            result[key] = number(entry["proportion"], f"{path}.proportion")
        return result
    if len(strata_keys) != 1:
        raise InvalidConfig("shorthand proportions need exactly one stratum key; use the 'proportions' list form", "$")
    for value, p in obj.items():
        result[((strata_keys[0], value),)] = number(p, f"$.{value}")
    return result


def cmd_sample(args: argparse.Namespace) -> int:
    population = parse_records(_read_text(args.population), args.input_format or format_for_path(args.population))
    keys = _strata_list(args.strata)
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    external = parse_proportions(_read_text(args.proportions), keys) if args.proportions else None
    if args.size < 1:
        raise InvalidConfig("--size must be positive")
    plan = plan_sample(population, keys, args.size, seed, external)
    sample = draw_sample(population, plan)
    out_format = args.output_format or (format_for_path(args.out) if args.out else format_for_path(args.population))
    text = render_records(sample, out_format)
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    if plan.infeasible:
        print(f"warning: {_infeasible_warning(plan)}", file=sys.stderr)
    print(representativeness_report(sample, population, keys).render(), file=sys.stderr)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# capability


def cmd_capability(args: argparse.Namespace) -> int:
    if args.lsl is None and args.usl is None:
        raise InvalidConfig("give --lsl and/or --usl")
    if (args.lsl is None) != (args.ci_lower is None):
        raise InvalidConfig("--lsl and --ci-lower must be given together")
    if (args.usl is None) != (args.ci_upper is None):
        raise InvalidConfig("--usl and --ci-upper must be given together")
    if args.lsl is not None and args.usl is not None and args.lsl >= args.usl:
        raise InvalidConfig("--lsl must be below --usl")
    lower = cpl(args.mean, args.lsl, args.ci_lower) if args.lsl is not None else None
    upper = cpu(args.mean, args.usl, args.ci_upper) if args.usl is not None else None
    for name, ix in (("cpl", lower), ("cpu", upper)):
        if ix is not None:
            print(f"{name}: {format_value(ix.value)}{' (degenerate)' if ix.degenerate else ''}")
    cpk = combine_cpk(lower, upper)
    verdict = classify_verdict(cpk)
    print(f"cpk: {format_value(cpk)}")
    print(f"SCFC verdict: {verdict.label} (Cpk={format_value(cpk)})")
    return _exit_for(verdict, args.strict)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scfc",
        description="Bootstrap confidence intervals, capability indices and deployment verdicts for AI evaluation results.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="run the full pipeline and gate on the verdict")
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--records", metavar="PATH", help="per-sample evaluation records (CSV or JSONL)")
    src.add_argument("--counts", metavar="PATH", help="aggregate confusion counts JSON")
    ev.add_argument("--records-format", choices=["csv", "jsonl"], help="override format detection by extension")
    ev.add_argument("--spec", metavar="PATH", required=True, help="evaluation spec JSON")
    ev.add_argument("--seed", type=int, help=f"override the spec-file seed (default: ${SEED_ENV}, then the spec file)")
    ev.add_argument("--resamples", type=int, help="override the number of bootstrap resamples")
    ev.add_argument("--out", metavar="PATH", help="report file; with --format both, .json and .md siblings")
    ev.add_argument("--format", choices=["json", "markdown", "both"], default="json", help="report format")
    ev.add_argument("--dump-distribution", metavar="PATH", help="write raw bootstrap values as single-column CSV")
    ev.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-reproducible reports")
    ev.add_argument("--strict", action="store_true", help="pass only on an Excellent verdict")
    ev.add_argument("--workers", type=int, default=1, help="bootstrap threads; 0 means one per CPU (default: 1)")
    ev.add_argument("--strata", help="comma-separated stratum keys for the optional sampling step")
    ev.add_argument("--sample-size", type=int, help="draw a stratified sample of this size before bootstrapping")
    ev.set_defaults(func=cmd_evaluate)

    sm = sub.add_parser("sample", help="draw a stratified, seeded sample from a population")
    sm.add_argument("--population", metavar="PATH", required=True, help="population records (CSV or JSONL)")
    sm.add_argument("--strata", required=True, help="comma-separated stratum keys")
    sm.add_argument("--size", type=int, required=True, help="requested sample size")
    sm.add_argument("--seed", type=int, help=f"selection seed (default: ${SEED_ENV}, then 0)")
    sm.add_argument("--proportions", metavar="PATH", help="external stratum proportions JSON")
    sm.add_argument("--out", metavar="PATH", help="sample output file (default: stdout)")
    sm.add_argument("--input-format", choices=["csv", "jsonl"], help="override population format detection")
    sm.add_argument("--output-format", choices=["csv", "jsonl"], help="override sample output format")
    sm.set_defaults(func=cmd_sample)

    cp = sub.add_parser("capability", help="compute Cpl/Cpu/Cpk from precomputed statistics")
    cp.add_argument("--mean", type=float, required=True, help="bootstrap distribution mean")
    cp.add_argument("--ci-lower", type=float, help="lower CI bound (pairs with --lsl)")
    cp.add_argument("--ci-upper", type=float, help="upper CI bound (pairs with --usl)")
    cp.add_argument("--lsl", type=float, help="lower specification limit")
    cp.add_argument("--usl", type=float, help="upper specification limit")
    cp.add_argument("--strict", action="store_true", help="pass only on an Excellent verdict")
    cp.set_defaults(func=cmd_capability)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except SCFCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
