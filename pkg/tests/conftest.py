import time

import pytest

#: wall-clock budget for the whole suite, in seconds
SUITE_BUDGET = 60.0

_outcomes: dict[int, tuple[str, list[str]]] = {}
_start: list[float] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, title): test implements an acceptance criterion")


def pytest_sessionstart(session):
    _start.append(time.perf_counter())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and report.passed:
        return

    number, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    previous, titles = _outcomes.get(number, ("PASS", []))
    if previous == "FAIL":
        status = "FAIL"
    if title not in titles:
        titles.append(title)
    _outcomes[number] = (status, titles)


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _start[0]
    session.config._fracmech_elapsed = elapsed
    if _outcomes and elapsed > SUITE_BUDGET:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, titles = _outcomes[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {titles[0]}")

    elapsed = getattr(config, "_fracmech_elapsed", time.perf_counter() - _start[0])
    status = "PASS" if elapsed <= SUITE_BUDGET else "FAIL"
    terminalreporter.write_line(
        f"criterion 12: {status}  full suite in {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)")
