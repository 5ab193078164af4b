"""Collects acceptance-test outcomes and prints one PASS/FAIL line per criterion."""
import pytest

_results = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if call.when == "setup" and call.excinfo is not None:
        skipped = call.excinfo.errisinstance(pytest.skip.Exception)
        _results[label] = "SKIP" if skipped else "FAIL"
    elif call.when == "call":
        if call.excinfo is None:
            _results[label] = "PASS"
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            _results[label] = "SKIP"
        else:
            _results[label] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_results):
        terminalreporter.write_line(f"{_results[label]}  {label}")
