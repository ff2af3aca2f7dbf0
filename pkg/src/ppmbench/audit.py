"""Independent verification of a written benchmark.

Only the file schema is shared with the pipeline: every predicate here is
re-derived from the CSV rows and the manifest's recorded values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from ppmbench.errors import LogFormatError
from ppmbench.log_model import MS_PER_DAY, PREFIX_COLUMNS, parse_timestamp

# float slack when rebuilding durations from elapsed + target; far below 1 ms
DAYS_EPS = 1e-9

CHECKS = {
    "a": "train and test case ids are disjoint",
    "b": "every training case ends before the separation time",
    "c": "every test prefix ends at or after the separation time",
    "d": "no prefix ends inside the end-of-dataset zone",
    "e": "no case lasts longer than the chosen maximum duration",
    "f": "manifest accounting equals recomputed accounting",
    "g": "full case equivalent formula holds",
}


@dataclass
class _PrefixRow:
    case_id: str
    length: int
    end_ms: int = 0
    first_ms: int | None = None
    elapsed_days: float = 0.0
    target_days: float = 0.0
    rows: int = 0

    @property
    def case_end_ms(self) -> int:
        # targets are whole milliseconds expressed in days
        return self.end_ms + round(self.target_days * MS_PER_DAY)


@dataclass
class CheckResult:
    check: str
    description: str
    passed: bool
    detail: str = ""


@dataclass
class AuditReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.check for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"check": c.check, "description": c.description, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def read_prefix_file(path: str | Path) -> dict[tuple[str, int], _PrefixRow]:
    """Group the rows of a prefix CSV into prefixes keyed by (case, length)."""
    path = Path(path)
    out: dict[tuple[str, int], _PrefixRow] = {}
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LogFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != PREFIX_COLUMNS:
            raise LogFormatError(f"{path}: header {reader.fieldnames} is not the prefix schema")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["case_id"], int(row["prefix_length"]))
                idx = int(row["event_index"])
                ts = parse_timestamp(row["timestamp"])
                elapsed = float(row["elapsed_days"])
                target = float(row["target_days"])
            except (TypeError, ValueError) as exc:
                raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
            pr = out.setdefault(key, _PrefixRow(*key))
            pr.rows += 1
            if idx == 1:
                pr.first_ms = ts
            if idx == key[1]:
                pr.end_ms = ts
                pr.elapsed_days = elapsed
                pr.target_days = target
    broken = [f"{k[0]}#{k[1]}" for k, pr in out.items() if pr.rows != k[1] or pr.first_ms is None]
    if broken:
        raise LogFormatError(f"{path}: prefixes without exactly one row per event: {_sample(broken)}")
    return out


def _by_case(prefixes: dict[tuple[str, int], _PrefixRow]) -> dict[str, list[_PrefixRow]]:
    cases: dict[str, list[_PrefixRow]] = {}
    for (cid, _), pr in prefixes.items():
        cases.setdefault(cid, []).append(pr)
    return cases


def _sample(items, n: int = 5) -> str:
    items = sorted(items)
    more = f" (+{len(items) - n} more)" if len(items) > n else ""
    return ", ".join(map(str, items[:n])) + more


def recompute_accounting(train_file: str | Path, test_file: str | Path) -> dict:
    train = _by_case(read_prefix_file(train_file))
    test = _by_case(read_prefix_file(test_file))
    return _accounting(train, test)


def _accounting(train: dict[str, list[_PrefixRow]], test: dict[str, list[_PrefixRow]]) -> dict:
    short = long_ = complete = 0
    for rows in test.values():
        # a case missing its first prefix started before the separation time
        missing_short = min(r.length for r in rows) > 1
        # the full-length prefix is the only one allowed a zero target
        missing_long = not any(r.target_days == 0.0 for r in rows)
        short += missing_short
        long_ += missing_long
        complete += not (missing_short or missing_long)
    return {
        "train_cases": len(train),
        "test_cases_all": len(test),
        "test_missing_short_prefixes": short,
        "test_missing_long_prefixes": long_,
        "test_complete": complete,
        "total_cases": len(train) + len(test),
    }


def audit_benchmark(train_file: str | Path, test_file: str | Path, manifest: str | Path | dict) -> AuditReport:
    if not isinstance(manifest, dict):
        try:
            manifest = json.loads(Path(manifest).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise LogFormatError(f"cannot read manifest {manifest}: {exc}") from exc
    train_p = read_prefix_file(train_file)
    test_p = read_prefix_file(test_file)
    train = _by_case(train_p)
    test = _by_case(test_p)

    t_sep = parse_timestamp(manifest["separation_time"])
    report = AuditReport()

    def add(check: str, bad, what: str) -> None:
        report.checks.append(
            CheckResult(check, CHECKS[check], not bad, f"{len(bad)} {what}: {_sample(bad)}" if bad else "")
        )

    add("a", set(train) & set(test), "shared case ids")
    add("b", {cid for cid, rows in train.items() if max(r.case_end_ms for r in rows) >= t_sep}, "training cases ending at or after t_sep")
    add("c", {f"{k[0]}#{k[1]}" for k, p in test_p.items() if p.end_ms < t_sep}, "test prefixes ending before t_sep")

    zone = manifest.get("end_debias")
    if zone:
        log_end = parse_timestamp(zone["log_end"])
        zone_start = log_end - int(zone["zone_width_ms"])
        inside = {
            f"{k[0]}#{k[1]}"
            for k, p in (*train_p.items(), *test_p.items())
            if zone_start <= p.end_ms <= log_end
        }
        add("d", inside, "prefixes ending inside the zone")
    else:
        report.checks.append(CheckResult("d", CHECKS["d"], False, "manifest records no end-of-dataset debiasing"))

    d = manifest.get("max_duration_days")
    if d is None:
        report.checks.append(CheckResult("e", CHECKS["e"], False, "manifest records no maximum duration"))
    else:
        too_long = set()
        for p in (*train_p.values(), *test_p.values()):
            if p.elapsed_days + p.target_days > d + DAYS_EPS:
                too_long.add(p.case_id)
        add("e", too_long, "cases longer than the maximum duration")

    recomputed = _accounting(train, test)
    recorded = manifest.get("accounting", {})
    diffs = [f"{k}: manifest {recorded.get(k)} != {v}" for k, v in recomputed.items() if recorded.get(k) != v]
    report.checks.append(CheckResult("f", CHECKS["f"], not diffs, "; ".join(diffs)))

    fce = recorded.get("full_case_equivalent")
    try:
        expected = (
            recorded["train_cases"]
            + recorded["test_complete"]
            + (recorded["test_missing_short_prefixes"] + recorded["test_missing_long_prefixes"]) / 2
        )
        ok = fce == expected
        detail = "" if ok else f"manifest {fce} != {expected}"
    except (KeyError, TypeError) as exc:
        ok, detail = False, f"accounting incomplete: {exc}"
    report.checks.append(CheckResult("g", CHECKS["g"], ok, detail))
    return report

