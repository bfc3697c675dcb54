import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")
    config.addinivalue_line("markers", "solver: needs the external solver")


def pytest_collection_modifyitems(config, items):
    if shutil.which("z3"):
        return
    skip = pytest.mark.skip(reason="z3 not on PATH")
    for item in items:
        if "solver" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n, title = mark.args
        prev = _CRITERIA.get(n, (title, "PASS"))[1]
        status = "PASS" if rep.passed and prev == "PASS" else ("SKIP" if rep.skipped else "FAIL")
        _CRITERIA[n] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")
