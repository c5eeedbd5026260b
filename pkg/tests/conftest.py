import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "status": "PASS", "tests": []})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if rep.skipped:
            entry["status"] = "SKIP" if entry["status"] == "PASS" else entry["status"]
        elif rep.failed:
            entry["status"] = "FAIL"
            entry["tests"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        extra = f"  (failed: {', '.join(e['tests'])})" if e["tests"] else ""
        terminalreporter.write_line(f"criterion {n}: {e['status']}  {e['title']}{extra}")
