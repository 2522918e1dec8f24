"""Per-criterion PASS/FAIL summary for the acceptance module."""
from collections import OrderedDict

import pytest

_results = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or report.failed:
        entry = _results.setdefault(mark.args[0], [])
        entry.append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcomes in _results.items():
        failed = [n for n, ok in outcomes if not ok]
        status = "FAIL" if failed else "PASS"
        detail = f"  (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{status}  {name}{detail}")
