"""Collects acceptance-criterion verdicts into an end-of-run summary."""

import pytest

_CRITERION_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    line = getattr(item.function, "criterion_line", None)
    if line is None:
        return
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        _CRITERION_LINES.append(f"[{status}] {line}")
    elif report.failed:
        # fixture blew up before the criterion body ran
        _CRITERION_LINES.append(f"[FAIL] {line} (error during {report.when})")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERION_LINES:
        terminalreporter.write_line(line)
