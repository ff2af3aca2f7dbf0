"""Dataset statistics and monthly time profiles."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

from ppmbench.errors import EmptyLogError
from ppmbench.log_model import EventLog, ms_to_days

STAT_COLUMNS = (
    ("n_cases", "Nr. cases"),
    ("n_events", "Nr. events"),
    ("median_events_per_case", "Median nr. events"),
    ("mean_events_per_case", "Avg. nr. events"),
    ("median_duration_days", "Median nr. days"),
    ("mean_duration_days", "Mean nr. days"),
    ("max_duration_days", "Max nr. days"),
    ("span_days", "Dataset nr. days"),
)


@dataclass(frozen=True)
class DatasetStats:
    n_cases: int
    n_events: int
    median_events_per_case: float
    mean_events_per_case: float
    median_duration_days: float
    mean_duration_days: float
    max_duration_days: float
    span_days: float

    def as_dict(self) -> dict:
        return asdict(self)

    def rounded(self) -> dict:
        """Presentation values: counts as-is, everything else to 0.1."""
        return {k: (v if isinstance(v, int) else round(v, 1)) for k, v in asdict(self).items()}

    def inconsistencies(self) -> list[str]:
        out = []
        if self.max_duration_days > self.span_days:
            out.append("max_duration_days exceeds span_days")
        return out


@dataclass(frozen=True)
class MonthStat:
    month: str  # YYYY-MM
    case_starts: int
    mean_duration_days: float | None
    events: int


@dataclass(frozen=True)
class MonthlyProfile:
    months: tuple[MonthStat, ...]

    @property
    def case_starts(self) -> list[int]:
        return [m.case_starts for m in self.months]

    @property
    def events(self) -> list[int]:
        return [m.events for m in self.months]

    def as_list(self) -> list[dict]:
        return [asdict(m) for m in self.months]


def compute_stats(log: EventLog) -> DatasetStats:
    """Table-style summary of a log. Medians average the two middle values."""
    if len(log) == 0:
        raise EmptyLogError("cannot compute statistics of an empty log")
    sizes = [len(c) for c in log]
    durations = [c.duration_days for c in log]
    return DatasetStats(
        n_cases=len(sizes),
        n_events=sum(sizes),
        median_events_per_case=statistics.median(sizes),
        mean_events_per_case=statistics.fmean(sizes),
        median_duration_days=statistics.median(durations),
        mean_duration_days=statistics.fmean(durations),
        max_duration_days=max(durations),
        span_days=ms_to_days(log.end - log.start),
    )


def month_of(ms: int) -> tuple[int, int]:
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.year, dt.month


def _month_range(first: tuple[int, int], last: tuple[int, int]) -> list[tuple[int, int]]:
    out = []
    y, m = first
    while (y, m) <= last:
        out.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def monthly_profile(log: EventLog) -> MonthlyProfile:
    """Per calendar month: case starts, mean duration of those cases, events.

    Months between the first and last event are zero-filled.
    """
    if len(log) == 0:
        return MonthlyProfile(())
    starts: dict[tuple[int, int], list[float]] = {}
    events: dict[tuple[int, int], int] = {}
    for case in log:
        starts.setdefault(month_of(case.start), []).append(case.duration_days)
        for event in case.events:
            key = month_of(event.timestamp)
            events[key] = events.get(key, 0) + 1
    months = []
    for key in _month_range(month_of(log.start), month_of(log.end)):
        durs = starts.get(key, [])
        months.append(
            MonthStat(
                month=f"{key[0]:04d}-{key[1]:02d}",
                case_starts=len(durs),
                mean_duration_days=statistics.fmean(durs) if durs else None,
                events=events.get(key, 0),
            )
        )
    return MonthlyProfile(tuple(months))


def render_table(rows: dict[str, DatasetStats]) -> str:
    """Aligned text table, one row per dataset."""
    header = ["Dataset", *(label for _, label in STAT_COLUMNS)]
    body = []
    for name, st in rows.items():
        r = st.rounded()
        body.append([name, *(f"{r[k]:,}" if isinstance(r[k], int) else f"{r[k]:,.1f}" for k, _ in STAT_COLUMNS)])
    widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    for row in body:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
    return "\n".join(lines)
