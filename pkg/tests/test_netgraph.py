import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_connected
from radiolabel.netgraph import (
    Graph,
    GraphError,
    ceil_log2,
    generate,
    graph_stats,
    load_graph,
    parse_family,
    save_graph,
    star_path,
)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(g.nodes())
    h.add_edges_from(g.edges())
    return h


def test_path_edges():
    g = generate(parse_family("path:n=4"))
    assert g.edges() == [(0, 1), (1, 2), (2, 3)]


def test_star_path_shape():
    g = star_path(3, 4)
    assert g.n == 7
    hub = 2
    assert g.degree(hub) == 5
    assert sorted(g.neighbors(hub)) == [1, 3, 4, 5, 6]
    assert graph_stats(g, 0) == (7, 5, 3, 3)


def test_random_connected_is_seeded():
    a = generate(parse_family("random-connected:n=50,p=0.1,seed=7"))
    b = generate(parse_family("random-connected:n=50,p=0.1,seed=7"))
    assert a.edges() == b.edges()
    assert a.is_connected()


def test_random_connected_gives_up():
    with pytest.raises(GraphError, match="disconnected after 100"):
        generate(parse_family("random-connected:n=40,p=0.0"))


def test_load_minimal_and_round_trip():
    g = load_graph(b"2 1\n0 1")
    assert g.n == 2 and g.edges() == [(0, 1)]
    messy = b"4 3\n3 2\n1 0\n2 1\n"
    assert save_graph(load_graph(messy)) == b"4 3\n0 1\n1 2\n2 3\n"


@pytest.mark.parametrize(
    "text, needle",
    [
        (b"3 1\n0 1", "disconnected"),
        (b"2 1\n0 0", "line 2: self-loop"),
        (b"3 3\n0 1\n1 2\n2 1", "line 4: parallel"),
        (b"2 1\n0 5", "line 2: edge (0, 5) out of range"),
        (b"2 2\n0 1", "header declares 2 edges"),
        (b"x\n", "line 1"),
        (b"3 2\n0 1\n1 two", "line 3"),
    ],
)
def test_load_errors(text, needle):
    with pytest.raises(GraphError, match=needle.replace("(", r"\(").replace(")", r"\)")):
        load_graph(text)


def test_stats_examples():
    assert graph_stats(generate(parse_family("path:n=4")), 0) == (4, 2, 3, 3)
    assert graph_stats(generate(parse_family("star:n=6")), 0) == (6, 5, 1, 2)


def test_parse_family_errors():
    with pytest.raises(GraphError, match="unknown graph family"):
        parse_family("cycle:n=4")
    with pytest.raises(GraphError, match="needs parameters"):
        parse_family("grid:rows=3")
    with pytest.raises(GraphError, match="positive integer"):
        parse_family("path:n=2.5")


def test_ceil_log2():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 16, 17, 4096)] == [1, 1, 2, 2, 3, 4, 5, 12]


@given(st.integers(2, 40), st.floats(0.0, 0.3), st.integers(0, 10_000))
def test_distances_and_diameter_match_networkx(n, extra, seed):
    g = random_connected(n, extra, seed)
    h = to_nx(g)
    assert g.diameter() == nx.diameter(h)
    lengths = nx.single_source_shortest_path_length(h, 0)
    assert g.distances(0) == [lengths[v] for v in range(n)]
    ecc = g.eccentricity(0)
    assert ecc <= g.diameter() <= 2 * ecc


@given(st.integers(2, 30), st.floats(0.0, 0.4), st.integers(0, 10_000))
def test_save_load_round_trip(n, extra, seed):
    g = random_connected(n, extra, seed)
    assert load_graph(save_graph(g)) == g
    g.validate()


def test_generated_families_valid(family_graph):
    _, g = family_graph
    g.validate()
    assert all(g.has_edge(v, u) for u, v in g.edges())
