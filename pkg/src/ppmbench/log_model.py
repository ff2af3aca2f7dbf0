"""Event log data model, CSV ingestion, deduplication and prefix generation.

Timestamps are held as integer UTC epoch milliseconds. Durations and targets
are reported in fractional days.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from ppmbench.errors import LogFormatError

MS_PER_DAY = 86_400_000
ISO8601 = "ISO8601"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ISO_FRACTION = re.compile(r"(\d{2}:\d{2}:\d{2})\.(\d+)")
_ISO_OFFSET_NO_COLON = re.compile(r"([+-]\d{2})(\d{2})$")

PREFIX_COLUMNS = (
    "case_id",
    "prefix_length",
    "event_index",
    "activity",
    "timestamp",
    "elapsed_days",
    "target_days",
)


def datetime_to_ms(dt: datetime) -> int:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def parse_timestamp(text: str, fmt: str = ISO8601) -> int:
    """Parse ``text`` into UTC epoch milliseconds.

    Naive timestamps are taken to be UTC. With ``fmt == "ISO8601"`` a
    trailing ``Z``, offsets without a colon and fractions of any length are
    accepted; any other ``fmt`` is handed to :func:`datetime.strptime`.
    Raises ``ValueError`` when the text does not parse.
    """
    text = text.strip()
    if fmt != ISO8601:
        return datetime_to_ms(datetime.strptime(text, fmt))
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    text = _ISO_OFFSET_NO_COLON.sub(r"\1:\2", text)
    text = _ISO_FRACTION.sub(lambda m: f"{m.group(1)}.{m.group(2)[:6].ljust(6, '0')}", text)
    return datetime_to_ms(datetime.fromisoformat(text))


def format_timestamp(ms: int) -> str:
    """ISO 8601 UTC rendering with millisecond precision."""
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return f"{dt:%Y-%m-%dT%H:%M:%S}.{ms % 1000:03d}+00:00"


def ms_to_days(ms: int) -> float:
    return ms / MS_PER_DAY


@dataclass(frozen=True)
class ColumnMapping:
    """Names the input columns. Nothing is ever inferred from the data."""

    case_id: str = "case_id"
    activity: str = "activity"
    timestamp: str = "timestamp"
    timestamp_format: str = ISO8601
    delimiter: str = ","


@dataclass(frozen=True, slots=True)
class Event:
    case_id: str
    activity: str
    timestamp: int
    attributes: tuple[tuple[str, str], ...] = ()

    @property
    def attribute_map(self) -> dict[str, str]:
        return dict(self.attributes)


@dataclass(frozen=True, slots=True)
class Case:
    """Events of one case, ordered by timestamp with ties in file order."""

    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self) -> None:
        if not self.events:
            raise ValueError(f"case {self.case_id!r} has no events")

    @property
    def start(self) -> int:
        return self.events[0].timestamp

    @property
    def end(self) -> int:
        return self.events[-1].timestamp

    @property
    def duration_ms(self) -> int:
        return self.end - self.start

    @property
    def duration_days(self) -> float:
        return ms_to_days(self.end - self.start)

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True, slots=True)
class Prefix:
    """The first ``length`` events of a case, labelled with its remaining time."""

    case_id: str
    length: int
    end_timestamp: int
    case_start: int
    case_end: int
    activity: str = ""

    @property
    def target_ms(self) -> int:
        return self.case_end - self.end_timestamp

    @property
    def target_days(self) -> float:
        return ms_to_days(self.case_end - self.end_timestamp)

    @property
    def elapsed_days(self) -> float:
        return ms_to_days(self.end_timestamp - self.case_start)

    @property
    def key(self) -> tuple[str, int]:
        return (self.case_id, self.length)


@dataclass(frozen=True)
class HistoryStep:
    step: str
    params: Mapping[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"step": self.step, "params": dict(self.params)}


@dataclass(frozen=True)
class EventLog:
    """Immutable collection of cases keyed (and iterated) by case id."""

    cases: Mapping[str, Case]
    source: str = ""
    mapping: ColumnMapping = ColumnMapping()
    attribute_columns: tuple[str, ...] = ()
    history: tuple[HistoryStep, ...] = ()

    @classmethod
    def from_cases(cls, cases: Iterable[Case], **kwargs) -> "EventLog":
        by_id: dict[str, Case] = {}
        for case in cases:
            if case.case_id in by_id:
                raise ValueError(f"duplicate case id {case.case_id!r}")
            by_id[case.case_id] = case
        return cls(cases={cid: by_id[cid] for cid in sorted(by_id)}, **kwargs)

    def derive(self, cases: Iterable[Case], step: str, **params) -> "EventLog":
        """New log with ``cases`` and ``step`` appended to the history."""
        kept = {c.case_id: c for c in cases}
        return replace(
            self,
            cases={cid: kept[cid] for cid in sorted(kept)},
            history=self.history + (HistoryStep(step, params),),
        )

    def __len__(self) -> int:
        return len(self.cases)

    def __iter__(self) -> Iterator[Case]:
        return iter(self.cases.values())

    @property
    def n_events(self) -> int:
        return sum(len(c) for c in self.cases.values())

    def events(self) -> Iterator[Event]:
        for case in self.cases.values():
            yield from case.events

    @property
    def start(self) -> int:
        return min(c.start for c in self.cases.values())

    @property
    def end(self) -> int:
        return max(c.end for c in self.cases.values())

    def longest_case(self) -> Case:
        # first in case-id order among equals
        return max(self.cases.values(), key=lambda c: c.duration_ms)


def parse_csv(path: str | Path, mapping: ColumnMapping = ColumnMapping()) -> EventLog:
    """Read an event log from a CSV file with a header row.

    Every row becomes an event. A missing column or an unparseable
    timestamp is fatal and reports the offending line.
    """
    path = Path(path)
    grouped: dict[str, list[Event]] = {}
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=mapping.delimiter)
        header = reader.fieldnames or []
        if not header:
            raise LogFormatError(f"{path}: missing header row")
        required = (mapping.case_id, mapping.activity, mapping.timestamp)
        missing = [col for col in required if col not in header]
        if missing:
            raise LogFormatError(f"{path}: missing column(s) {', '.join(missing)}")
        attr_cols = tuple(c for c in header if c not in required)
        for lineno, row in enumerate(reader, start=2):
            if None in row:
                raise LogFormatError(f"{path}:{lineno}: more fields than header columns")
            case_id = row[mapping.case_id]
            activity = row[mapping.activity]
            if not case_id or not activity:
                raise LogFormatError(f"{path}:{lineno}: empty case id or activity")
            raw_ts = row[mapping.timestamp]
            try:
                ts = parse_timestamp(raw_ts or "", mapping.timestamp_format)
            except ValueError as exc:
                raise LogFormatError(f"{path}:{lineno}: unparseable timestamp {raw_ts!r}") from exc
            attrs = tuple((c, row[c] if row[c] is not None else "") for c in attr_cols)
            grouped.setdefault(case_id, []).append(Event(case_id, activity, ts, attrs))
    # sorted() is stable, so equal timestamps keep file order
    cases = (Case(cid, tuple(sorted(evs, key=lambda e: e.timestamp))) for cid, evs in grouped.items())
    return EventLog.from_cases(
        cases,
        source=path.name,
        mapping=mapping,
        attribute_columns=attr_cols,
        history=(HistoryStep("parse_csv", {"source": path.name}),),
    )


def write_csv(log: EventLog, path: str | Path) -> None:
    """Write ``log`` in the input schema of its own column mapping."""
    m = log.mapping
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=m.delimiter, lineterminator="\n")
        writer.writerow([m.case_id, m.activity, m.timestamp, *log.attribute_columns])
        for event in log.events():
            attrs = event.attribute_map
            writer.writerow(
                [
                    event.case_id,
                    event.activity,
                    format_timestamp(event.timestamp),
                    *(attrs.get(c, "") for c in log.attribute_columns),
                ]
            )


def deduplicate(log: EventLog) -> tuple[EventLog, int]:
    """Collapse events identical in every column, keeping the first."""
    removed = 0
    cases = []
    for case in log:
        seen: set[Event] = set()
        kept = []
        for event in case.events:
            if event in seen:
                removed += 1
                continue
            seen.add(event)
            kept.append(event)
        cases.append(case if len(kept) == len(case) else Case(case.case_id, tuple(kept)))
    return log.derive(cases, "deduplicate", removed=removed), removed


def case_prefixes(case: Case) -> list[Prefix]:
    start, end = case.start, case.end
    return [
        Prefix(case.case_id, k, e.timestamp, start, end, e.activity) for k, e in enumerate(case.events, start=1)
    ]


def generate_prefixes(log: EventLog) -> list[Prefix]:
    """One prefix per event, ordered by case id then length."""
    out: list[Prefix] = []
    for case in log:
        out.extend(case_prefixes(case))
    return out


def write_prefixes(path: str | Path, log: EventLog, prefixes: Iterable[Prefix]) -> int:
    """Write prefixes in the benchmark schema; returns the number of rows.

    A prefix of length k is spelled out as k rows (``event_index`` 1..k) so
    each prefix carries its full event sequence, including events that
    precede the separation time for test-set straddlers.
    """
    ordered = sorted(prefixes, key=lambda p: (p.case_id, p.length))
    rows = 0
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREFIX_COLUMNS)
        for p in ordered:
            case = log.cases[p.case_id]
            for idx, event in enumerate(case.events[: p.length], start=1):
                writer.writerow(
                    [
                        p.case_id,
                        p.length,
                        idx,
                        event.activity,
                        format_timestamp(event.timestamp),
                        repr(ms_to_days(event.timestamp - case.start)),
                        repr(p.target_days),
                    ]
                )
                rows += 1
    return rows
