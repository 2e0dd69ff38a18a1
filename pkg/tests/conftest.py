import random

import pytest
from hypothesis import settings

from radiolabel.netgraph import Graph, generate, parse_family

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SMALL_FAMILIES = [
    "path:n=4",
    "path:n=33",
    "star:n=12",
    "complete-binary-tree:n=63",
    "grid:rows=7,cols=9",
    "star-path:D=3,delta=4",
    "random-connected:n=120,p=0.05,seed=3",
    "random-connected:n=200,p=0.03,seed=11",
]


def random_connected(n: int, extra: float, seed: int) -> Graph:
    """Random spanning tree plus extra edges; connected by construction."""
    rng = random.Random(seed)
    edges = {(rng.randrange(v), v) for v in range(1, n)}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < extra:
                edges.add((u, v))
    return Graph.from_edges(n, sorted(edges))


@pytest.fixture(params=SMALL_FAMILIES)
def family_graph(request):
    return request.param, generate(parse_family(request.param))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
