import pytest

from reaim.energy import Datacenter
from reaim.topology import Graph

_ACCEPTANCE_LINES: list[str] = []


def make_dc(node, hosted, *, servers=1000, vps=10, renewable=0.0, price=1.0, bandwidths=None):
    if bandwidths is None:
        bandwidths = [5.0] * hosted
    return Datacenter(node, servers, vps, hosted, float(renewable), float(price),
                      tuple(float(b) for b in bandwidths))


@pytest.fixture
def diamond():
    # a=1, b=2, c=3, d=4
    return Graph.from_edges([(1, 2), (1, 3), (2, 4), (3, 4)])


@pytest.fixture
def line3():
    return Graph.from_edges([(1, 2), (2, 3)])


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
