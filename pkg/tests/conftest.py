"""Shared fixtures: preset runs are cached once per session.

Tests marked ``criterion(n, title)`` also feed a one-line-per-criterion
PASS/FAIL summary printed at the end of the session.
"""

from __future__ import annotations

import functools

import pytest

from densitylab.harness import run

_CRITERIA: dict[int, dict] = {}


@functools.lru_cache(maxsize=None)
def preset_report(name: str):
    return run(name)


@pytest.fixture(scope="session")
def report_of():
    return preset_report


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
    if rep.when == "setup" and rep.passed:
        return
    if hasattr(rep, "wasxfail"):
        status = "FAIL (expected, strict xfail)"
    elif rep.passed:
        status = "PASS"
    elif rep.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    entry["parts"].append((item.name, status))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        statuses = [s for _, s in entry["parts"]]
        overall = "PASS" if statuses and all(s == "PASS" for s in statuses) else "FAIL"
        detail = "" if overall == "PASS" else "  [" + "; ".join(f"{n}: {s}" for n, s in entry["parts"]) + "]"
        terminalreporter.write_line(f"criterion {number:>2} {overall}  {entry['title']}{detail}")
