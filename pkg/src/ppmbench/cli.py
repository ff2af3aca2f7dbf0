"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 pipeline or audit
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ppmbench import __version__
from ppmbench.audit import audit_benchmark
from ppmbench.config import PipelineConfig, resolve_config
from ppmbench.debias import choose_max_duration, scan_durations
from ppmbench.errors import ConfigError, PpmBenchError
from ppmbench.evaluation import LADDER_COLUMNS, run_ladder
from ppmbench.log_model import deduplicate, parse_csv, write_csv
from ppmbench.pipeline import SCAN_COLUMNS, run_pipeline, write_scan
from ppmbench.stats import compute_stats, monthly_profile, render_table
from ppmbench.synth import SCENARIOS, DurationDistribution, generate
from ppmbench.trim import suggest_trim, trim_chronological

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2

log = logging.getLogger("ppmbench")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", help="JSON config file; flags win over its values")
    g.add_argument("--preset", metavar="NAME", help="dataset preset (column names and trim bounds)")
    g.add_argument("--out", metavar="DIR", help="output directory")
    g.add_argument("--seed", type=int, help="random seed (synth)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _log_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("input", nargs="?", help="event log CSV (or set 'input' in the config)")
    g = p.add_argument_group("input mapping")
    g.add_argument("--case-column")
    g.add_argument("--activity-column")
    g.add_argument("--timestamp-column")
    g.add_argument("--timestamp-format", help="strptime format or ISO8601 (default)")
    g.add_argument("--delimiter")
    g = p.add_argument_group("trimming")
    g.add_argument("--start-bound", metavar="YYYY-MM[-DD]")
    g.add_argument("--end-bound", metavar="YYYY-MM[-DD]")
    g.add_argument("--end-bound-applies-to", choices=("end", "start"))
    g.add_argument("--deduplicate", action=argparse.BooleanOptionalAction, default=None)
    return p


def _split_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("splitting")
    g.add_argument("--test-fraction", type=float)
    g.add_argument("--long-case-cap", type=float, help="largest share of cases long-case removal may drop")
    g.add_argument("--max-duration", dest="max_duration_days", type=float, help="fixed maximum case duration in days")
    g.add_argument("--remove-long-cases", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--split-mode", choices=("strict", "regular"))
    g.add_argument("--debias-end", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--debias-test-start", action=argparse.BooleanOptionalAction, default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    glob, logf, splitf = _global_flags(), _log_flags(), _split_flags()
    parser = _Parser(prog="ppmbench", description="Unbiased, leakage-free benchmark sets from event logs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", parents=[glob, logf], help="dataset statistics and monthly profile (JSON)")
    p.add_argument("--table", action="store_true", help="print an aligned text table instead of JSON")
    p.add_argument("--raw", action="store_true", help="skip trimming even when bounds are configured")

    p = sub.add_parser("suggest-trim", parents=[glob, logf], help="advisory trim bounds (JSON)")
    p.add_argument("--sparsity-ratio", type=float, default=0.1)

    sub.add_parser("scan-durations", parents=[glob, logf, splitf], help="training/test sizes per maximum duration (CSV)")
    sub.add_parser("preprocess", parents=[glob, logf, splitf], help="build train.csv, test.csv and manifest.json")
    sub.add_parser("evaluate", parents=[glob, logf, splitf], help="seven-variant preprocessing ladder with baseline MAE")

    p = sub.add_parser("audit", parents=[glob], help="verify a benchmark directory; exit 0 iff every check passes")
    p.add_argument("benchmark", nargs="?", help="directory holding train.csv, test.csv, manifest.json")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--manifest")

    p = sub.add_parser("synth", parents=[glob], help="write a seeded synthetic log and its ground truth")
    p.add_argument("--n-cases", type=int, default=200)
    p.add_argument("--scenario", choices=SCENARIOS, default="plain")
    p.add_argument("--durations", default="exponential:5", help="KIND:PARAMS, e.g. lognormal:1.0,0.5")
    p.add_argument("--arrival-rate", type=float, default=2.0, help="cases per day")
    p.add_argument("--mean-events", type=float, default=5.0)
    p.add_argument("--activities", help="comma-separated activity names")
    return parser


_CONFIG_FLAGS = (
    "input",
    "case_column",
    "activity_column",
    "timestamp_column",
    "timestamp_format",
    "delimiter",
    "start_bound",
    "end_bound",
    "end_bound_applies_to",
    "deduplicate",
    "test_fraction",
    "long_case_cap",
    "max_duration_days",
    "remove_long_cases",
    "split_mode",
    "debias_end",
    "debias_test_start",
    "out",
)


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if hasattr(args, k)}
    cfg = resolve_config(args.config, args.preset, **overrides)
    if not cfg.input:
        raise ConfigError("no input log given (positional argument or 'input' in the config)")
    return cfg


def _load(cfg: PipelineConfig, trim: bool = True):
    raw = parse_csv(cfg.input, cfg.mapping)
    current = deduplicate(raw)[0] if cfg.deduplicate else raw
    if trim:
        current = trim_chronological(current, cfg.trim_bounds)[0]
    return current


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_stats(args) -> int:
    cfg = _config(args)
    current = _load(cfg, trim=not args.raw)
    st = compute_stats(current)
    if args.table:
        print(render_table({cfg.preset or Path(cfg.input).stem: st}))
    else:
        _dump(
            {
                "stats": st.as_dict(),
                "rounded": st.rounded(),
                "inconsistencies": st.inconsistencies(),
                "monthly_profile": monthly_profile(current).as_list(),
            }
        )
    return EXIT_OK


def cmd_suggest_trim(args) -> int:
    cfg = _config(args)
    bounds = suggest_trim(monthly_profile(_load(cfg, trim=False)), args.sparsity_ratio)
    _dump({"start_bound": bounds.start_on_or_after, "end_bound": bounds.end_on_or_before, "advisory": True})
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _config(args)
    scan = scan_durations(_load(cfg), cfg.test_fraction, cfg.cap)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_scan(Path(args.out) / "scan.csv", scan)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for p in scan:
            writer.writerow([p.max_duration_days, p.removed_case_fraction, p.train_cases, p.train_events, p.test_cases, p.test_events])
    if scan:
        log.info("largest training set at d = %.1f days", choose_max_duration(scan))
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    manifest = run_pipeline(cfg)
    _dump(
        {
            "out": cfg.out,
            "config_hash": manifest["config_hash"],
            "max_duration_days": manifest["max_duration_days"],
            "separation_time": manifest["separation_time"],
            "accounting": manifest["accounting"],
            "timing": manifest["timing"],
        }
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    rows = run_ladder(parse_csv(cfg.input, cfg.mapping), cfg)
    table = [r.as_dict() for r in rows]
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "ladder.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, LADDER_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(table)
    (out / "ladder.json").write_text(json.dumps(table, indent=2) + "\n", encoding="utf-8")
    _dump(table)
    return EXIT_OK


def cmd_audit(args) -> int:
    if args.benchmark:
        base = Path(args.benchmark)
        train, test, manifest = base / "train.csv", base / "test.csv", base / "manifest.json"
    elif args.train and args.test and args.manifest:
        train, test, manifest = args.train, args.test, args.manifest
    else:
        raise ConfigError("give a benchmark directory or all of --train, --test, --manifest")
    report = audit_benchmark(train, test, manifest)
    _dump(report.as_dict())
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_synth(args) -> int:
    if args.seed is None:
        raise ConfigError("synth needs an explicit --seed")
    kwargs = {}
    if args.activities:
        kwargs["activities"] = tuple(a for a in args.activities.split(",") if a)
    log_, truth = generate(
        args.seed,
        args.n_cases,
        DurationDistribution.parse(args.durations),
        args.arrival_rate,
        mean_events=args.mean_events,
        scenario=args.scenario,
        **kwargs,
    )
    out = Path(args.out or "synth")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(log_, out / "log.csv")
    truth.write(out / "ground_truth.json")
    _dump({"log": str(out / "log.csv"), "ground_truth": str(out / "ground_truth.json"), "cases": len(log_)})
    return EXIT_OK


COMMANDS = {
    "stats": cmd_stats,
    "suggest-trim": cmd_suggest_trim,
    "scan-durations": cmd_scan,
    "preprocess": cmd_preprocess,
    "evaluate": cmd_evaluate,
    "audit": cmd_audit,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ppmbench: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PpmBenchError as exc:
        print(f"ppmbench: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"ppmbench: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
