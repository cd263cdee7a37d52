import pytest

from multihop_aoi.distributions import Constant
from multihop_aoi.model import INF, Packets, Scenario, build_graph

# acceptance tests append (number, title, passed, detail) here; the summary
# hook prints one line per criterion at the end of the run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {title} ({detail})")


@pytest.fixture
def single_link():
    return build_graph(2, [(0, 1, INF, Constant(1.0))])


@pytest.fixture
def twin_packets(single_link):
    # two packets reaching the gateway together, the fresher one second
    return Scenario(single_link, Packets.from_pairs([(0.5, 1.0), (1.0, 1.0)]), horizon=10.0)
