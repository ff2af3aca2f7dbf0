"""Seeded synthetic event logs with a recorded ground truth."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from ppmbench.errors import ConfigError
from ppmbench.log_model import MS_PER_DAY, Case, Event, EventLog, HistoryStep, datetime_to_ms, format_timestamp

SCENARIOS = ("plain", "heavy_straddling", "pathological_long_case", "leading_sparse_months", "degenerate")
DEFAULT_ACTIVITIES = ("register", "check", "decide", "notify", "archive")
RESOURCES = ("r1", "r2", "r3")
DEFAULT_EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class DurationDistribution:
    """Case duration law in days.

    ``exponential(mean)``, ``lognormal(mu, sigma)``, ``uniform(low, high)``
    or ``fixed(days)``.
    """

    kind: str = "exponential"
    params: tuple[float, ...] = (5.0,)

    def __post_init__(self) -> None:
        p = self.params
        ok = {
            "exponential": len(p) == 1 and p[0] > 0,
            "lognormal": len(p) == 2 and p[1] >= 0,
            "uniform": len(p) == 2 and 0 <= p[0] <= p[1],
            "fixed": len(p) == 1 and p[0] >= 0,
        }
        if self.kind not in ok:
            raise ConfigError(f"unknown duration distribution {self.kind!r}")
        if not ok[self.kind]:
            raise ConfigError(f"invalid parameters {p} for {self.kind} durations")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.kind == "exponential":
            return rng.exponential(p[0], n)
        if self.kind == "lognormal":
            return rng.lognormal(p[0], p[1], n)
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], n)
        return np.full(n, p[0])

    @classmethod
    def parse(cls, text: str) -> "DurationDistribution":
        """``"lognormal:1.0,0.5"`` style spelling used on the command line."""
        kind, _, rest = text.partition(":")
        try:
            params = tuple(float(x) for x in rest.split(",")) if rest else ()
        except ValueError:
            raise ConfigError(f"bad duration distribution {text!r}") from None
        return cls(kind, params)


@dataclass
class GroundTruth:
    seed: int
    scenario: str
    cases: list[dict] = field(default_factory=list)
    monthly: dict[str, dict] = field(default_factory=dict)

    @property
    def first_timestamp(self) -> int:
        return min(c["start"] for c in self.cases)

    @property
    def last_timestamp(self) -> int:
        return max(c["end"] for c in self.cases)

    def durations_days(self) -> dict[str, float]:
        return {c["case_id"]: c["duration_days"] for c in self.cases}

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "scenario": self.scenario,
            "first_timestamp": format_timestamp(self.first_timestamp),
            "last_timestamp": format_timestamp(self.last_timestamp),
            "cases": [
                {**c, "start": format_timestamp(c["start"]), "end": format_timestamp(c["end"])} for c in self.cases
            ],
            "monthly": self.monthly,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _month_key(ms: int) -> str:
    return datetime.fromtimestamp(ms // 1000, tz=timezone.utc).strftime("%Y-%m")


def _schedule(cases: list[dict], event_times: list[list[int]]) -> dict[str, dict]:
    months: dict[str, dict] = {}

    def slot(key: str) -> dict:
        return months.setdefault(key, {"case_starts": 0, "events": 0, "duration_sum_days": 0.0})

    for c, times in zip(cases, event_times):
        s = slot(_month_key(c["start"]))
        s["case_starts"] += 1
        s["duration_sum_days"] += c["duration_days"]
        for t in times:
            slot(_month_key(t))["events"] += 1
    # zero-fill the calendar between first and last month
    keys = sorted(months)
    y, m = map(int, keys[0].split("-"))
    while f"{y:04d}-{m:02d}" < keys[-1]:
        slot(f"{y:04d}-{m:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return {k: months[k] for k in sorted(months)}


def generate(
    seed: int,
    n_cases: int,
    duration_distribution: DurationDistribution = DurationDistribution(),
    arrival_rate: float = 2.0,
    activities: Sequence[str] = DEFAULT_ACTIVITIES,
    mean_events: float = 5.0,
    scenario: str = "plain",
    epoch: datetime = DEFAULT_EPOCH,
) -> tuple[EventLog, GroundTruth]:
    """Draw a log of ``n_cases`` cases arriving at ``arrival_rate`` per day.

    Scenarios reshape the draw:

    * ``heavy_straddling``: durations rescaled to about a third of the
      arrival window, so many cases run across any separation time.
    * ``pathological_long_case``: the first case lasts 0.6 times the span of
      the other cases.
    * ``leading_sparse_months``: a handful of long cases start 3 to 6
      months before the main body.
    * ``degenerate``: every case lasts longer than the whole arrival window,
      so no case can complete before any separation time.
    """
    if n_cases < 1:
        raise ConfigError("n_cases must be at least 1")
    if arrival_rate <= 0:
        raise ConfigError("arrival_rate must be positive")
    if mean_events < 1:
        raise ConfigError("mean_events must be at least 1")
    if not activities:
        raise ConfigError("need at least one activity")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")

    rng = np.random.default_rng(seed)
    starts_days = np.cumsum(rng.exponential(1.0 / arrival_rate, n_cases))
    starts_days -= starts_days[0]
    window = max(float(starts_days[-1]), 1.0)
    durations = duration_distribution.sample(rng, n_cases)

    if scenario == "heavy_straddling":
        durations = durations / max(durations.mean(), 1e-9) * window / 3
    elif scenario == "degenerate":
        durations = window * rng.uniform(1.05, 1.3, n_cases)
    elif scenario == "leading_sparse_months":
        n_early = min(max(2, min(6, n_cases // 50)), n_cases - 1) if n_cases > 1 else 0
        if n_early:
            starts_days[:n_early] = -rng.uniform(90, 180, n_early)
            durations[:n_early] = rng.uniform(0.5 * window, window, n_early)
            order = np.argsort(starts_days, kind="stable")
            starts_days, durations = starts_days[order], durations[order]
    elif scenario == "pathological_long_case":
        others_end = float(np.max(starts_days[1:] + durations[1:])) if n_cases > 1 else window
        durations[0] = 0.6 * (others_end - starts_days[0])
    durations = np.maximum(durations, 0.0)

    base = datetime_to_ms(epoch)
    cases: list[Case] = []
    truth = GroundTruth(seed=seed, scenario=scenario)
    event_times: list[list[int]] = []
    width = len(str(n_cases))
    for i in range(n_cases):
        case_id = f"case_{i:0{width}d}"
        start = base + int(round(starts_days[i] * MS_PER_DAY))
        dur_ms = int(round(durations[i] * MS_PER_DAY))
        n_ev = 1 + int(rng.poisson(mean_events - 1))
        if dur_ms > 0:
            n_ev = max(n_ev, 2)
            inner = np.sort(rng.integers(start, start + dur_ms + 1, n_ev - 2))
            times = [start, *map(int, inner), start + dur_ms]
        else:
            times = [start] * n_ev
        acts = rng.choice(len(activities), n_ev)
        res = rng.choice(len(RESOURCES), n_ev)
        events = tuple(
            Event(case_id, activities[a], t, (("resource", RESOURCES[r]),)) for t, a, r in zip(times, acts, res)
        )
        cases.append(Case(case_id, events))
        event_times.append(times)
        truth.cases.append(
            {
                "case_id": case_id,
                "start": times[0],
                "end": times[-1],
                "duration_days": (times[-1] - times[0]) / MS_PER_DAY,
                "n_events": n_ev,
            }
        )
    truth.monthly = _schedule(truth.cases, event_times)
    log = EventLog.from_cases(
        cases,
        source=f"synth-{scenario}-seed{seed}",
        attribute_columns=("resource",),
        history=(HistoryStep("synth", {"seed": seed, "n_cases": n_cases, "scenario": scenario}),),
    )
    return log, truth
