"""Bucket-mean remaining-time baseline and the seven-variant preprocessing ladder."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from ppmbench.config import PipelineConfig
from ppmbench.errors import PipelineError
from ppmbench.log_model import EventLog, Prefix, format_timestamp
from ppmbench.pipeline import build_benchmark
from ppmbench.split import REGULAR, STRICT

# (label, lowest length, highest length or None)
LENGTH_BUCKETS = (
    ("1", 1, 1),
    ("2", 2, 2),
    ("3", 3, 3),
    ("4", 4, 4),
    ("5", 5, 5),
    ("6-10", 6, 10),
    ("11-20", 11, 20),
    ("21+", 21, None),
)


def length_bucket(length: int) -> str:
    for label, lo, hi in LENGTH_BUCKETS:
        if length >= lo and (hi is None or length <= hi):
            return label
    raise ValueError(f"prefix length must be >= 1, got {length}")


@dataclass(frozen=True)
class BaselineModel:
    means: Mapping[tuple[str, str], float]
    global_mean: float

    def predict(self, prefix: Prefix) -> float:
        return self.means.get((prefix.activity, length_bucket(prefix.length)), self.global_mean)


def fit_baseline(train_prefixes: Iterable[Prefix]) -> BaselineModel:
    """Mean remaining time per (last activity, prefix-length bucket)."""
    groups: dict[tuple[str, str], list[float]] = {}
    everything: list[float] = []
    for p in train_prefixes:
        t = p.target_days
        groups.setdefault((p.activity, length_bucket(p.length)), []).append(t)
        everything.append(t)
    if not everything:
        raise ValueError("cannot fit a baseline on an empty training set")
    return BaselineModel(
        means={k: statistics.fmean(v) for k, v in sorted(groups.items())},
        global_mean=statistics.fmean(everything),
    )


def evaluate_mae(model: BaselineModel, test_prefixes: Sequence[Prefix]) -> float:
    if not test_prefixes:
        raise ValueError("cannot evaluate on an empty test set")
    return statistics.fmean(abs(model.predict(p) - p.target_days) for p in test_prefixes)


VARIANT_NAMES = (
    "base 90/10",
    "outlier trimming",
    "end-of-dataset debiasing",
    "20% test set",
    "strict temporal split",
    "test-start debiasing",
    "long-case removal",
)


def variant_ladder(config: PipelineConfig) -> list[PipelineConfig]:
    """Seven configurations, each adding one preprocessing measure.

    ``config`` supplies column mapping, trim bounds, the final test fraction
    and the long-case cap (or explicit maximum duration) of the last rung.
    """
    base = config.updated(
        deduplicate=False,
        start_bound=None,
        end_bound=None,
        debias_end=False,
        test_fraction=0.10,
        split_mode=REGULAR,
        debias_test_start=False,
        remove_long_cases=False,
    )
    v2 = base.updated(deduplicate=True, start_bound=config.start_bound, end_bound=config.end_bound)
    v3 = v2.updated(debias_end=True)
    v4 = v3.updated(test_fraction=config.test_fraction)
    v5 = v4.updated(split_mode=STRICT)
    v6 = v5.updated(debias_test_start=True)
    v7 = v6.updated(remove_long_cases=True)
    return [base, v2, v3, v4, v5, v6, v7]


@dataclass(frozen=True)
class LadderRow:
    variant: int
    name: str
    train_cases: int | None
    train_events: int | None
    test_events: int | None
    max_case_duration_days: float | None
    separation_time: str | None
    mae_days: float | None
    reason: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


LADDER_COLUMNS = tuple(LadderRow.__dataclass_fields__)


def run_ladder(raw: EventLog, config: PipelineConfig) -> list[LadderRow]:
    """Build each variant's sets from ``raw`` and score the baseline on them.

    A variant whose pipeline fails (for instance with an empty training set)
    keeps a row with null sizes and MAE and the failure as ``reason``.
    """
    rows = []
    for i, (name, cfg) in enumerate(zip(VARIANT_NAMES, variant_ladder(config)), start=1):
        try:
            bench = build_benchmark(raw, cfg)
        except PipelineError as exc:
            rows.append(LadderRow(i, name, None, None, None, None, None, None, str(exc)))
            continue
        res = bench.split
        model = fit_baseline(res.train_prefixes)
        rows.append(
            LadderRow(
                variant=i,
                name=name,
                train_cases=res.accounting.train_cases,
                train_events=len(res.train_prefixes),
                test_events=len(res.test_prefixes),
                max_case_duration_days=max(c.duration_days for c in bench.log),
                separation_time=format_timestamp(res.separation_time),
                mae_days=evaluate_mae(model, res.test_prefixes),
            )
        )
    return rows
