import numpy as np
import pytest

from momentangle import load_fixture
from momentangle.fixtures import BOXES, NAMES

_criteria = {}


@pytest.fixture(scope="session")
def fixtures():
    return {name: load_fixture(name) for name in NAMES}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=NAMES)
def any_polytope(request, fixtures):
    return fixtures[request.param]


@pytest.fixture(params=BOXES)
def box(request, fixtures):
    return fixtures[request.param]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, title = mark.args
    if report.when == "call" or report.failed:
        # a criterion passes only if every test carrying it passes
        _criteria[number] = (title, _criteria.get(number, (title, True))[1] and report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'}")
