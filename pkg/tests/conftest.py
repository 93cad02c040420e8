import itertools

import pytest
from hypothesis import HealthCheck, settings

from profocus.navgraph import NavGraph, Waypoint

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_graph(positions, edges):
    """``positions`` maps id -> (x, y) or (x, y, z)."""
    wps = [Waypoint(w, tuple(float(c) for c in (tuple(p) + (0.0,) * (3 - len(p))))) for w, p in positions.items()]
    return NavGraph(wps, edges)


def chain(ids, spacing=1.0):
    return make_graph({w: (i * spacing, 0.0) for i, w in enumerate(ids)}, list(zip(ids, ids[1:])))


def simple_paths(graph, source, target):
    """Every simple path from source to target (exhaustive oracle, small graphs only)."""
    out = []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        if node == target:
            out.append(path)
            continue
        for nbr in graph.neighbors(node):
            if nbr not in path:
                stack.append((nbr, path + [nbr]))
    return out


def all_pairs(ids):
    return itertools.product(ids, ids)


@pytest.fixture
def triangle():
    return make_graph({"A": (0, 0), "B": (1, 0), "C": (0, 1)}, [("A", "B"), ("B", "C"), ("A", "C")])


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns a callable(number, name, ok, elapsed, limit, detail)."""

    def record(number, name, ok, elapsed, limit, detail=""):
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        line = f"criterion {number}: {status} {name} ({elapsed:.2f}s / limit {limit:g}s){' ' + detail if detail else ''}"
        request.config.acceptance_lines.append(line)
        print(line)
        assert ok, line
        assert within, line

    return record
