import io
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trustscope.consensus import FbaNetwork
from trustscope.graph import MicrocellGraph, edge_key
from trustscope.synthetic import WorldConfig, generate_world, write_checkins, write_edges


def make_graph(vertices, weighted_edges):
    edges = {}
    for u, v, w in weighted_edges:
        k = edge_key(u, v)
        edges[k] = edges.get(k, 0) + w
    return MicrocellGraph(frozenset(vertices), edges)


def two_cliques():
    """Two 5-cliques {0..4} and {5..9} joined by the single bridge 4-5."""
    a, b = range(5), range(5, 10)
    edges = [(u, v, 1) for grp in (a, b) for u in grp for v in grp if u < v]
    edges.append((4, 5, 1))
    return make_graph(range(10), edges)


def nine_cells():
    """Reconstructed nine-cell layout: {1..5} and {6..9} joined only by 5-7.

    1-4 carries two providers, 5-7 a single one.
    """
    edges = [
        (1, 2, 1), (1, 3, 1), (1, 4, 2), (2, 3, 1), (2, 4, 1), (2, 5, 1), (3, 4, 1), (3, 5, 1), (4, 5, 1), (1, 5, 1),
        (6, 7, 1), (6, 8, 1), (6, 9, 1), (7, 8, 1), (7, 9, 1), (8, 9, 1),
        (5, 7, 1),
    ]
    return make_graph(range(1, 10), edges)


@pytest.fixture
def abc_network():
    return FbaNetwork.from_slices({"A": [{"B", "C"}], "B": [{"C"}], "C": [{"A", "B"}]})


@pytest.fixture(scope="session")
def small_world():
    return generate_world(WorldConfig(users=600, locations=300, neighborhoods=12, checkins_per_user=15, seed=3))


@pytest.fixture(scope="session")
def world_dir(tmp_path_factory, small_world):
    checkins, edges = small_world
    d = tmp_path_factory.mktemp("world")
    with open(d / "loc-tiny_totalCheckins.txt", "w") as fh:
        write_checkins(checkins, fh)
    with open(d / "loc-tiny_edges.txt", "w") as fh:
        write_edges(edges, fh)
    return d


def text(s: str) -> io.BytesIO:
    return io.BytesIO(s.encode())


# one PASS/FAIL line per acceptance criterion, aggregated over its tests
_criteria: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "failed": [], "ran": 0})
    if report.when == "call" or report.outcome != "passed":
        entry["ran"] += report.when == "call"
        if report.outcome != "passed":
            reason = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else str(report.longrepr)
            entry["failed"].append(f"{report.nodeid.split('::')[-1]}: {reason.splitlines()[0]}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] or not entry["ran"] else "PASS"
        terminalreporter.write_line(f"criterion {number} {status}  {entry['title']}")
        for reason in entry["failed"]:
            terminalreporter.write_line(f"    {reason}")
