"""End-to-end benchmark construction and file output."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from ppmbench import __version__
from ppmbench.config import PipelineConfig
from ppmbench.debias import (
    DurationScanPoint,
    EndDebiasReport,
    choose_max_duration,
    debias_end,
    filter_long_cases,
    scan_durations,
    surviving_log,
)
from ppmbench.errors import PipelineError, PpmBenchError
from ppmbench.log_model import EventLog, deduplicate, format_timestamp, generate_prefixes, parse_csv, write_prefixes
from ppmbench.split import SplitResult, TimingRecord, report_timing, separation_time, split
from ppmbench.trim import trim_chronological

log = logging.getLogger(__name__)

SCAN_COLUMNS = ("d", "removed_fraction", "train_cases", "train_events", "test_cases", "test_events")


@contextmanager
def stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except (PpmBenchError, OSError) as exc:
        raise PipelineError(name, exc) from exc


@dataclass
class Benchmark:
    """Everything a pipeline run produced, kept in memory."""

    config: PipelineConfig
    log: EventLog
    split: SplitResult
    max_duration_days: float
    max_duration_source: str
    end_debias: EndDebiasReport | None
    timing: TimingRecord
    scan: list[DurationScanPoint] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)


def build_benchmark(raw: EventLog, config: PipelineConfig) -> Benchmark:
    """Run every in-memory stage on an already parsed log.

    Stage order: deduplicate, trim, choose the maximum duration, drop long
    cases, generate prefixes, debias the end, split. A failing stage raises
    :class:`PipelineError` carrying the stage name.
    """
    counts = {"parsed_cases": len(raw), "parsed_events": raw.n_events}
    current = raw
    if config.deduplicate:
        with stage("deduplicate"):
            current, counts["duplicates_removed"] = deduplicate(current)
    with stage("trim"):
        current, counts["trimmed_cases"] = trim_chronological(current, config.trim_bounds)

    scan: list[DurationScanPoint] = []
    if not config.remove_long_cases:
        d, source = max(c.duration_days for c in current), "none"
    elif config.max_duration_days is not None:
        d, source = config.max_duration_days, "override"
    else:
        with stage("scan_durations"):
            scan = scan_durations(current, config.test_fraction, config.cap)
            d, source = choose_max_duration(scan), "scan"
        current = current.derive(current, "choose_max_duration", max_duration_days=d, candidates=len(scan))
    counts["long_cases_removed"] = 0
    if config.remove_long_cases:
        with stage("filter_long_cases"):
            current, counts["long_cases_removed"] = filter_long_cases(current, d)

    with stage("generate_prefixes"):
        prefixes = generate_prefixes(current)
    current = current.derive(current, "generate_prefixes", prefixes=len(prefixes))
    report = None
    ranked = current
    if config.debias_end:
        with stage("debias_end"):
            prefixes, report = debias_end(current, prefixes)
            ranked = surviving_log(current, prefixes)
        current = current.derive(current, "debias_end", **report.as_dict())
    with stage("split"):
        t_sep = separation_time(ranked, config.test_fraction)
        result = split(prefixes, t_sep, config.split_spec)
    current = current.derive(
        current,
        "split",
        mode=result.mode,
        debias_test_start=result.debias_test_start,
        test_fraction=config.test_fraction,
        separation_time=format_timestamp(t_sep),
    )
    counts["train_prefixes"] = len(result.train_prefixes)
    counts["test_prefixes"] = len(result.test_prefixes)
    return Benchmark(
        config=config,
        log=current,
        split=result,
        max_duration_days=d,
        max_duration_source=source,
        end_debias=report,
        timing=report_timing(result, current),
        scan=scan,
        counts=counts,
    )


def manifest_for(bench: Benchmark, input_sha256: str | None = None) -> dict:
    cfg = bench.config
    res = bench.split
    return {
        "tool": "ppmbench",
        "version": __version__,
        "config_hash": cfg.digest(),
        "config": cfg.as_dict() | {"out": None},
        "input": {"file": bench.log.source, "sha256": input_sha256},
        "trim_bounds": cfg.trim_bounds.as_dict(),
        "max_duration_days": bench.max_duration_days,
        "max_duration_source": bench.max_duration_source,
        "split_mode": res.mode,
        "debias_test_start": res.debias_test_start,
        "test_fraction": cfg.test_fraction,
        "separation_time": format_timestamp(res.separation_time),
        "end_debias": bench.end_debias.as_dict() if bench.end_debias else None,
        "accounting": res.accounting.as_dict(),
        "timing": bench.timing.as_dict(),
        "counts": bench.counts,
        "history": [h.as_dict() for h in bench.log.history],
    }


def write_scan(path: str | Path, scan: list[DurationScanPoint]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for p in scan:
            writer.writerow(
                [
                    repr(p.max_duration_days),
                    repr(p.removed_case_fraction),
                    p.train_cases,
                    p.train_events,
                    p.test_cases,
                    p.test_events,
                ]
            )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_benchmark(bench: Benchmark, out_dir: str | Path, input_sha256: str | None = None) -> dict:
    """Write train.csv, test.csv, manifest.json (and scan.csv after a scan).

    Files are staged under temporary names and renamed only once all of
    them were written, so a failure leaves no partial benchmark behind.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = manifest_for(bench, input_sha256)
    targets = {
        "train.csv": lambda p: write_prefixes(p, bench.log, bench.split.train_prefixes),
        "test.csv": lambda p: write_prefixes(p, bench.log, bench.split.test_prefixes),
        "manifest.json": lambda p: p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"),
    }
    if bench.scan:
        targets["scan.csv"] = lambda p: write_scan(p, bench.scan)
    staged: list[tuple[Path, Path]] = []
    try:
        for name, writer in targets.items():
            tmp = out / f".{name}.partial"
            staged.append((tmp, out / name))
            writer(tmp)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return manifest


def run_pipeline(config: PipelineConfig) -> dict:
    """Parse ``config.input``, build the benchmark and write it to ``config.out``."""
    if not config.input:
        raise PipelineError("parse", PpmBenchError("no input file configured"))
    path = Path(config.input)
    with stage("parse"):
        raw = parse_csv(path, config.mapping)
    bench = build_benchmark(raw, config)
    with stage("write"):
        manifest = write_benchmark(bench, config.out, _sha256(path))
    log.info(
        "benchmark written to %s: %d train / %d test cases",
        config.out,
        bench.split.accounting.train_cases,
        bench.split.accounting.test_cases_all,
    )
    return manifest
