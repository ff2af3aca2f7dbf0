"""End-of-dataset debiasing and the long-case removal optimizer."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ppmbench.errors import ConfigError, DebiasError, EmptyLogError
from ppmbench.log_model import MS_PER_DAY, EventLog, Prefix, format_timestamp, ms_to_days
from ppmbench.split import n_test_cases


@dataclass(frozen=True)
class EndDebiasReport:
    log_end: int
    zone_width_ms: int
    dropped_cases: int
    truncated_cases: int
    dropped_prefixes: int

    @property
    def zone_start(self) -> int:
        return self.log_end - self.zone_width_ms

    @property
    def zone_width_days(self) -> float:
        return ms_to_days(self.zone_width_ms)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(
            log_end=format_timestamp(self.log_end),
            zone_start=format_timestamp(self.zone_start),
            zone_width_days=self.zone_width_days,
        )
        return d


def debias_end(
    log: EventLog, prefixes: Iterable[Prefix], zone_width_days: float | None = None
) -> tuple[list[Prefix], EndDebiasReport]:
    """Reject every prefix ending in the terminal zone of the log.

    The zone spans ``[log end - width, log end]`` where the width defaults to
    the longest case duration in ``log``. Cases keep whatever shorter
    prefixes end before the zone; cases left with none disappear.
    """
    if len(log) == 0:
        raise EmptyLogError("cannot debias an empty log")
    longest = log.longest_case()
    if zone_width_days is None:
        width = longest.duration_ms
    else:
        if zone_width_days < 0:
            raise ConfigError("zone width must be non-negative")
        width = round(zone_width_days * MS_PER_DAY)
    log_end = log.end
    zone_start = log_end - width
    kept: list[Prefix] = []
    per_case_dropped: dict[str, int] = {}
    per_case_kept: dict[str, int] = {}
    for p in prefixes:
        if p.end_timestamp < zone_start:
            kept.append(p)
            per_case_kept[p.case_id] = per_case_kept.get(p.case_id, 0) + 1
        else:
            per_case_dropped[p.case_id] = per_case_dropped.get(p.case_id, 0) + 1
    if not kept:
        raise DebiasError(
            f"end-of-dataset zone of {ms_to_days(width):.1f} days starting {format_timestamp(zone_start)} "
            f"covers every prefix; longest case {longest.case_id!r} lasts {longest.duration_days:.1f} days "
            "(consider removing long cases)",
            culprit_case=longest.case_id,
            culprit_days=longest.duration_days,
        )
    report = EndDebiasReport(
        log_end=log_end,
        zone_width_ms=width,
        dropped_cases=sum(1 for c in log if c.case_id not in per_case_kept),
        truncated_cases=sum(1 for cid in per_case_dropped if cid in per_case_kept),
        dropped_prefixes=sum(per_case_dropped.values()),
    )
    return kept, report


def surviving_log(log: EventLog, prefixes: Iterable[Prefix]) -> EventLog:
    """Restrict ``log`` to the cases that still own at least one prefix."""
    ids = {p.case_id for p in prefixes}
    return log.derive((c for c in log if c.case_id in ids), "debias_end")


def filter_long_cases(log: EventLog, max_duration_days: float) -> tuple[EventLog, int]:
    """Drop whole cases lasting longer than ``max_duration_days``."""
    if not max_duration_days > 0:
        raise ConfigError(f"max duration must be positive, got {max_duration_days}")
    kept = [c for c in log if c.duration_days <= max_duration_days]
    if not kept:
        raise EmptyLogError(f"no case lasts {max_duration_days} days or less")
    removed = len(log) - len(kept)
    return log.derive(kept, "filter_long_cases", max_duration_days=max_duration_days, removed=removed), removed


@dataclass(frozen=True)
class DurationScanPoint:
    max_duration_days: float
    removed_case_fraction: float
    train_cases: int
    train_events: int
    test_cases: int
    test_events: int

    def as_dict(self) -> dict:
        return asdict(self)


class _ScanArrays:
    """Case- and event-level arrays shared by every scan candidate."""

    def __init__(self, log: EventLog):
        cases = sorted(log, key=lambda c: (c.start, c.case_id))
        self.start = np.array([c.start for c in cases], dtype=np.int64)
        self.end = np.array([c.end for c in cases], dtype=np.int64)
        self.dur_ms = self.end - self.start
        self.dur_days = self.dur_ms / MS_PER_DAY
        self.n_events = np.array([len(c) for c in cases], dtype=np.int64)

        ts, prev, dur = [], [], []
        floor = np.iinfo(np.int64).min
        for c in cases:
            d = c.duration_days
            last = floor
            for e in c.events:
                ts.append(e.timestamp)
                prev.append(last)
                dur.append(d)
                last = e.timestamp
        order = np.argsort(np.array(ts, dtype=np.int64), kind="stable")
        self.ev_ts = np.array(ts, dtype=np.int64)[order]
        # timestamp of the preceding event in the same case
        self.ev_prev = np.array(prev, dtype=np.int64)[order]
        self.ev_dur = np.array(dur, dtype=np.float64)[order]


def _scan_point(a: _ScanArrays, d: float, test_fraction: float) -> DurationScanPoint:
    n_total = len(a.start)
    retained = a.dur_days <= d
    removed = float(n_total - retained.sum()) / n_total
    zone_start = a.end[retained].max() - a.dur_ms[retained].max()
    survivors = np.flatnonzero(retained & (a.start < zone_start))
    n = len(survivors)
    if n < 2:
        return DurationScanPoint(d, removed, 0, 0, 0, 0)
    t_sep = a.start[survivors[n - n_test_cases(n, test_fraction)]]
    train = survivors[a.end[survivors] < t_sep]
    # test prefixes are exactly the retained-case events in [t_sep, zone_start)
    lo, hi = np.searchsorted(a.ev_ts, [t_sep, zone_start], side="left")
    seg_keep = a.ev_dur[lo:hi] <= d
    # a case joins the test set through its first event at or after t_sep
    first_after = a.ev_prev[lo:hi] < t_sep
    return DurationScanPoint(
        max_duration_days=d,
        removed_case_fraction=removed,
        train_cases=int(len(train)),
        train_events=int(a.n_events[train].sum()),
        test_cases=int((seg_keep & first_after).sum()),
        test_events=int(seg_keep.sum()),
    )


def scan_candidates(durations_days: Sequence[float], cap: float) -> list[float]:
    """Distinct durations whose use as threshold removes at most ``cap`` of cases."""
    durs = np.sort(np.asarray(durations_days, dtype=np.float64))
    n = len(durs)
    allowed = math.floor(round(cap * n, 9))
    out = []
    for d in np.unique(durs):
        removed = n - np.searchsorted(durs, d, side="right")
        if removed <= allowed:
            out.append(float(d))
    return out


def scan_durations(log: EventLog, test_fraction: float = 0.20, cap: float = 0.05) -> list[DurationScanPoint]:
    """Train/test sizes after the full debiased strict pipeline, per threshold.

    Each candidate threshold ``d`` filters long cases, debiases the end with
    a zone as wide as the longest retained case, splits strictly and
    debiases the test start. Points come back in increasing ``d``.
    """
    if not 0 < cap < 1:
        raise ConfigError(f"long-case cap must lie in (0, 1), got {cap}")
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if len(log) == 0:
        return []
    arrays = _ScanArrays(log)
    return [_scan_point(arrays, d, test_fraction) for d in scan_candidates(arrays.dur_days, cap)]


def choose_max_duration(scan: Sequence[DurationScanPoint]) -> float:
    """Threshold with the largest training set; ties go to the larger threshold."""
    if not scan:
        raise ValueError("empty duration scan")
    best = max(scan, key=lambda p: (p.train_cases, p.max_duration_days))
    return best.max_duration_days
