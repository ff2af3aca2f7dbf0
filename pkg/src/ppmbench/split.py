"""Temporal train/test splitting with test-start debiasing and accounting."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from ppmbench.errors import ConfigError, EmptyLogError, EmptyTrainingSetError, SplitError
from ppmbench.log_model import EventLog, Prefix, format_timestamp, ms_to_days

log = logging.getLogger(__name__)

REGULAR = "regular"
STRICT = "strict"


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.20
    mode: str = STRICT
    debias_test_start: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.mode not in (REGULAR, STRICT):
            raise ConfigError(f"split mode must be {REGULAR!r} or {STRICT!r}, got {self.mode!r}")


@dataclass(frozen=True)
class SplitAccounting:
    """Case counts of a split.

    A test case can miss both short prefixes (it straddles the separation
    time) and long ones (it ran into the end-of-dataset zone); ``overlap``
    counts those, and ``test_cases_all`` is the size of the union.
    """

    train_cases: int
    test_cases_all: int
    test_missing_short_prefixes: int
    test_missing_long_prefixes: int
    test_complete: int
    overlap: int = 0

    @property
    def total_cases(self) -> int:
        return self.train_cases + self.test_cases_all

    @property
    def full_case_equivalent(self) -> float:
        return (
            self.train_cases
            + self.test_complete
            + (self.test_missing_short_prefixes + self.test_missing_long_prefixes) / 2
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total_cases"] = self.total_cases
        d["full_case_equivalent"] = self.full_case_equivalent
        return d


@dataclass(frozen=True)
class SplitResult:
    separation_time: int
    train_prefixes: tuple[Prefix, ...]
    test_prefixes: tuple[Prefix, ...]
    accounting: SplitAccounting
    mode: str = STRICT
    debias_test_start: bool = True

    @property
    def test_start_date(self) -> str:
        return format_timestamp(self.separation_time)[:10]

    @property
    def dataset_end(self) -> int:
        """Latest prefix end across both sets."""
        return max(p.end_timestamp for p in (*self.train_prefixes, *self.test_prefixes))

    @property
    def dataset_end_date(self) -> str:
        return format_timestamp(self.dataset_end)[:10]

    @property
    def train_case_ids(self) -> set[str]:
        return {p.case_id for p in self.train_prefixes}

    @property
    def test_case_ids(self) -> set[str]:
        return {p.case_id for p in self.test_prefixes}


def n_test_cases(n_cases: int, test_fraction: float) -> int:
    # rounding guards against products like 0.1 * 30 = 3.0000000000000004
    return math.ceil(round(test_fraction * n_cases, 9))


def separation_time(log_: EventLog, test_fraction: float) -> int:
    """Start time of the earliest case in the last ``test_fraction`` of cases.

    Cases are ranked by (start, case id); the test block holds the last
    ``ceil(test_fraction * n)`` of them.
    """
    n = len(log_)
    if n < 2:
        raise EmptyLogError(f"need at least 2 cases to split, got {n}")
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    ranked = sorted(log_, key=lambda c: (c.start, c.case_id))
    k = n_test_cases(n, test_fraction)
    t_sep = ranked[n - k].start
    if ranked[0].start == t_sep:
        log.warning("every case before the test block starts at the separation time; the split is degenerate")
    return t_sep


def _account(train: Sequence[Prefix], test: Sequence[Prefix], t_sep: int) -> SplitAccounting:
    test_cases: dict[str, list[Prefix]] = {}
    for p in test:
        test_cases.setdefault(p.case_id, []).append(p)
    short = long_ = both = complete = 0
    for prefixes in test_cases.values():
        is_short = prefixes[0].case_start < t_sep
        is_long = all(p.target_ms > 0 for p in prefixes)
        short += is_short
        long_ += is_long
        both += is_short and is_long
        complete += not (is_short or is_long)
    return SplitAccounting(
        train_cases=len({p.case_id for p in train}),
        test_cases_all=len(test_cases),
        test_missing_short_prefixes=short,
        test_missing_long_prefixes=long_,
        test_complete=complete,
        overlap=both,
    )


def _ordered(prefixes: Iterable[Prefix]) -> tuple[Prefix, ...]:
    return tuple(sorted(prefixes, key=lambda p: (p.case_id, p.length)))


def partition_regular(prefixes: Iterable[Prefix], t_sep: int) -> tuple[list[Prefix], list[Prefix]]:
    train, test = [], []
    for p in prefixes:
        (train if p.case_start < t_sep else test).append(p)
    return train, test


def partition_strict(
    prefixes: Iterable[Prefix], t_sep: int, debias_test_start: bool = True
) -> tuple[list[Prefix], list[Prefix]]:
    """Membership rules of the strict split, without emptiness checks.

    Straddler prefixes ending before ``t_sep`` land in neither set.
    """
    train, test = [], []
    for p in prefixes:
        if p.case_end < t_sep:
            train.append(p)
        elif p.case_start >= t_sep:
            test.append(p)
        elif debias_test_start and p.end_timestamp >= t_sep:
            test.append(p)
    return train, test


def _finish(train, test, t_sep, mode, debias_test_start) -> SplitResult:
    if not train:
        raise EmptyTrainingSetError(
            f"{mode} split at {format_timestamp(t_sep)} leaves an empty training set: "
            "no case completes before the separation time"
        )
    if not test:
        raise SplitError(f"{mode} split at {format_timestamp(t_sep)} leaves an empty test set", side="test")
    return SplitResult(
        separation_time=t_sep,
        train_prefixes=_ordered(train),
        test_prefixes=_ordered(test),
        accounting=_account(train, test, t_sep),
        mode=mode,
        debias_test_start=debias_test_start,
    )


def split_regular(prefixes: Iterable[Prefix], t_sep: int) -> SplitResult:
    """Split by case start only; leaks concurrency and exists for comparison."""
    train, test = partition_regular(prefixes, t_sep)
    return _finish(train, test, t_sep, REGULAR, False)


def split_strict(prefixes: Iterable[Prefix], t_sep: int, debias_test_start: bool = True) -> SplitResult:
    """Train on cases completed before ``t_sep``; test on what follows it."""
    train, test = partition_strict(prefixes, t_sep, debias_test_start)
    return _finish(train, test, t_sep, STRICT, debias_test_start)


def split(prefixes: Iterable[Prefix], t_sep: int, spec: SplitSpec) -> SplitResult:
    if spec.mode == REGULAR:
        return split_regular(prefixes, t_sep)
    return split_strict(prefixes, t_sep, spec.debias_test_start)


@dataclass(frozen=True)
class TimingRecord:
    max_duration_days: float
    span_days: float
    test_start_date: str
    dataset_end_date: str

    def as_dict(self) -> dict:
        return asdict(self)


def report_timing(result: SplitResult, log_: EventLog) -> TimingRecord:
    """Timing columns of a proposed benchmark.

    The dataset end is the latest retained prefix end, so the span runs
    from the first event of ``log_`` to there.
    """
    return TimingRecord(
        max_duration_days=max(c.duration_days for c in log_),
        span_days=ms_to_days(result.dataset_end - log_.start),
        test_start_date=result.test_start_date,
        dataset_end_date=result.dataset_end_date,
    )
