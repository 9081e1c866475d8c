from __future__ import annotations

import time

import pytest

RESULTS: list[tuple[int, str, str, float]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    item._started = time.perf_counter()
    yield


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    elapsed = time.perf_counter() - getattr(item, "_started", time.perf_counter())
    status = "PASS" if rep.passed else "FAIL"
    RESULTS.append((n, title, status, elapsed))
    print(f"\ncriterion {n} {status}: {title} ({elapsed:.1f} s)")


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, status, elapsed in sorted(RESULTS):
        terminalreporter.write_line(f"criterion {n} {status}: {title} ({elapsed:.1f} s)")
