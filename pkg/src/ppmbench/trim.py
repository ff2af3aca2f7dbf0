"""Removal of chronological outliers at the start and end of a log."""

from __future__ import annotations

import calendar
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, timezone

from ppmbench.errors import ConfigError, EmptyLogError
from ppmbench.log_model import EventLog, datetime_to_ms
from ppmbench.stats import MonthlyProfile

_BOUND = re.compile(r"^(\d{4})-(\d{2})(?:-(\d{2}))?$")


def _bound_instants(text: str) -> tuple[int, int]:
    """First and last millisecond of the month or day named by ``text``."""
    m = _BOUND.match(text)
    if not m:
        raise ConfigError(f"bad date bound {text!r}; expected YYYY-MM or YYYY-MM-DD")
    year, month = int(m.group(1)), int(m.group(2))
    try:
        if m.group(3):
            first_day = last_day = int(m.group(3))
        else:
            first_day, last_day = 1, calendar.monthrange(year, month)[1]
        lo = datetime(year, month, first_day, tzinfo=timezone.utc)
        hi = datetime(year, month, last_day, 23, 59, 59, 999000, tzinfo=timezone.utc)
    except ValueError as exc:
        raise ConfigError(f"bad date bound {text!r}: {exc}") from None
    return datetime_to_ms(lo), datetime_to_ms(hi)


@dataclass(frozen=True)
class TrimBounds:
    """Month- or day-granular cutoffs, both inclusive.

    ``start_on_or_after`` keeps cases starting at or after the first instant
    of the named period; ``end_on_or_before`` keeps cases whose end (or
    start, with ``end_applies_to="start"``) is at or before its last instant.
    """

    start_on_or_after: str | None = None
    end_on_or_before: str | None = None
    end_applies_to: str = "end"

    def __post_init__(self) -> None:
        if self.end_applies_to not in ("end", "start"):
            raise ConfigError(f"end_applies_to must be 'end' or 'start', got {self.end_applies_to!r}")
        lo, hi = self.start_ms, self.end_ms
        if lo is not None and hi is not None and lo >= hi:
            raise ConfigError(f"start bound {self.start_on_or_after} is not before end bound {self.end_on_or_before}")

    @property
    def start_ms(self) -> int | None:
        return None if self.start_on_or_after is None else _bound_instants(self.start_on_or_after)[0]

    @property
    def end_ms(self) -> int | None:
        return None if self.end_on_or_before is None else _bound_instants(self.end_on_or_before)[1]

    @property
    def is_empty(self) -> bool:
        return self.start_on_or_after is None and self.end_on_or_before is None

    def as_dict(self) -> dict:
        return {
            "start_on_or_after": self.start_on_or_after,
            "end_on_or_before": self.end_on_or_before,
            "end_applies_to": self.end_applies_to,
        }


def trim_chronological(log: EventLog, bounds: TrimBounds) -> tuple[EventLog, int]:
    """Keep whole cases inside ``bounds``; never truncates a case."""
    lo, hi = bounds.start_ms, bounds.end_ms
    kept = []
    for case in log:
        if lo is not None and case.start < lo:
            continue
        if hi is not None and (case.end if bounds.end_applies_to == "end" else case.start) > hi:
            continue
        kept.append(case)
    removed = len(log) - len(kept)
    if log.cases and not kept:
        raise EmptyLogError(f"trim bounds {bounds.as_dict()} remove all {len(log)} cases")
    return log.derive(kept, "trim_chronological", removed=removed, **bounds.as_dict()), removed


def suggest_trim(profile: MonthlyProfile, sparsity_ratio: float = 0.1) -> TrimBounds:
    """Advisory bounds dropping sparse leading and trailing months.

    A month is sparse when its case-start count is below
    ``sparsity_ratio`` times the median monthly count. Only runs of sparse
    months touching either end of the profile are cut.
    """
    if not 0 < sparsity_ratio < 1:
        raise ConfigError("sparsity_ratio must lie strictly between 0 and 1")
    counts = profile.case_starts
    if not counts:
        return TrimBounds()
    threshold = sparsity_ratio * statistics.median(counts)
    first = 0
    while first < len(counts) and counts[first] < threshold:
        first += 1
    if first == len(counts):
        return TrimBounds()
    last = len(counts) - 1
    while counts[last] < threshold:
        last -= 1
    months = profile.months
    return TrimBounds(
        start_on_or_after=months[first].month if first > 0 else None,
        end_on_or_before=months[last].month if last < len(counts) - 1 else None,
    )
