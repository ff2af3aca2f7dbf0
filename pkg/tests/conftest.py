from __future__ import annotations

import re
from datetime import datetime, timezone

import pytest

from ppmbench.log_model import MS_PER_DAY, Case, Event, EventLog, datetime_to_ms

BASE = datetime_to_ms(datetime(2021, 1, 1, tzinfo=timezone.utc))


def day(x: float) -> int:
    return BASE + round(x * MS_PER_DAY)


def make_log(spec: dict[str, list], **kwargs) -> EventLog:
    """Build a log from ``{case_id: [day offset | (activity, day offset), ...]}``."""
    cases = []
    for cid, evs in spec.items():
        events = []
        for i, e in enumerate(evs):
            act, off = e if isinstance(e, tuple) else (f"a{i}", e)
            events.append(Event(cid, act, day(off)))
        cases.append(Case(cid, tuple(sorted(events, key=lambda ev: ev.timestamp))))
    return EventLog.from_cases(cases, **kwargs)


@pytest.fixture
def tiny_log() -> EventLog:
    return make_log({"a": [0, 1, 3], "b": [2, 2.5], "c": [4, 8]})


# acceptance summary: one line per criterion at the end of the run
_CRITERIA: dict[int, list[str]] = {}
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _TITLES[m.args[0]] = m.args[1]


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(n, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcomes = _CRITERIA[n]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        elif "skipped" in outcomes:
            verdict = f"PASS ({outcomes.count('skipped')} data-dependent part(s) skipped)"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {_TITLES.get(n, '')}")
