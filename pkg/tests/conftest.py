import numpy as np
import pytest

from smdtn.geo import PolyRoute, RouteGraph, synthesize_stations
from smdtn.routing import AlertMessage


def straight_route(route_id="R", length=2000.0, spacing=800.0, k=3, kind="local", stations=None):
    xy = np.array([[0.0, 0.0], [length, 0.0]])
    arc = np.array([0.0, length])
    return PolyRoute(route_id, kind, xy, arc, stations or synthesize_stations(length, spacing, k))


def straight_graph(**kw) -> RouteGraph:
    return RouteGraph([straight_route(**kw)], (0.0, 0.0))


def msg(mid, src=0, dst=1, size=10_000, created=0.0, ttl=100.0, hops=0):
    return AlertMessage(mid, src, dst, size, created, ttl, hops)


@pytest.fixture
def graph2k():
    return straight_graph()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
