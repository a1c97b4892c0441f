import numpy as np
import pytest
from hypothesis import settings

from ppne.graph import Graph

settings.register_profile("ppne", max_examples=40, deadline=None)
settings.load_profile("ppne")


def er(n: int, p: float, seed: int, connected_min_degree: bool = False) -> Graph:
    """Small G(n, p) by direct enumeration; optionally re-drawn until no node is isolated."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    while True:
        keep = rng.random(len(iu)) < p
        g = Graph.from_edges(n, np.column_stack([iu[keep], ju[keep]]))
        if g.edge_count and (not connected_min_degree or g.degrees.min() > 0):
            return g


@pytest.fixture
def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def er_graph():
    return er


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
