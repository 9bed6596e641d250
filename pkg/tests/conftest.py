import numpy as np
import pytest

from marcz.space import DiscreteSpace, Subspace

_CRITERIA = {}
_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA[item.nodeid] = (m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or report.outcome == "failed":
        prev = _OUTCOMES.get(report.nodeid)
        if prev is None or report.outcome == "failed":
            _OUTCOMES[report.nodeid] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    by_number = {}
    for nodeid, (n, text) in _CRITERIA.items():
        if nodeid in _OUTCOMES:
            by_number.setdefault(n, []).append((text, *_OUTCOMES[nodeid]))
    for n in sorted(by_number):
        for text, outcome, duration in by_number[n]:
            status = "PASS" if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"criterion {n:>2} {status}  {text}  ({duration:.1f} s)")


@pytest.fixture
def binomial_pair():
    """Two atoms of mass 1/2 carrying the constant and one Rademacher function."""
    space = DiscreteSpace(weights=np.array([0.5, 0.5]), label="two-point")
    sub = Subspace(space=space, values=np.array([[1.0, 1.0], [1.0, -1.0]]), orthonormal=True)
    return space, sub
