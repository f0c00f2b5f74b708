from __future__ import annotations

import pytest

_results: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    key, title = marker.args
    entry = _results.setdefault(key, {"title": title, "passed": True, "tests": 0})
    if report.when == "call":
        entry["tests"] += 1
    if report.failed:
        entry["passed"] = False


def _sort_key(key: str):
    digits = "".join(ch for ch in key if ch.isdigit())
    return (int(digits or 0), key)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=_sort_key):
        entry = _results[key]
        status = "PASS" if entry["passed"] and entry["tests"] else "FAIL"
        terminalreporter.write_line(f"{status} criterion {key}: {entry['title']}")
