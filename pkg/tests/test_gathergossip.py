import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_connected
from radiolabel.gathergossip import (
    STUB_RESERVE_FACTOR,
    GatherCollision,
    GossipConfig,
    SColoring,
    SinkCountMismatch,
    assign_s_coloring,
    check_s_coloring,
    compute_schedule,
    disseminate_parameters,
    gathering_window,
    gossip_pipeline,
    prepare_gossip_labels,
    run_gather_centralized,
    run_gather_distributed,
)
from radiolabel.hrt import RootedTree, TwoHeightMap, bfs_tree, build_2hrt
from radiolabel.netgraph import Graph, ceil_log2, generate, parse_family


def _gather_setup(g, sink=0):
    tree, heights = build_2hrt(g, sink)
    coloring = assign_s_coloring(g, tree)
    return tree, heights, coloring, compute_schedule(tree, heights, coloring, max(tree.level))


def test_coloring_examples():
    star = generate(parse_family("star:n=6"))
    col = assign_s_coloring(star, bfs_tree(star, 0))
    assert [col.s[v] for v in range(1, 6)] == [0, 1, 2, 3, 4] and col.color_count == 5
    path = generate(parse_family("path:n=7"))
    col = assign_s_coloring(path, bfs_tree(path, 0))
    assert set(col.s.values()) == {0} and col.color_count == 1


def test_coloring_checker_finds_conflicts():
    # 4-cycle: 1 and 2 share parent 0 (siblings); 3 is alone on level 2
    g = generate(parse_family("grid:rows=2,cols=2"))
    tree = bfs_tree(g, 0)
    bad = SColoring({1: 0, 2: 0, 3: 0}, 1)
    kinds = {k for k, *_ in check_s_coloring(g, tree, bad)}
    assert "siblings" in kinds
    assert check_s_coloring(g, tree, SColoring({1: 0, 2: 0, 3: 5}, 2))[0][0] == "range"
    # parent-edge clause: 3 (under 1) is adjacent to 2 = p(4)
    g = Graph.from_edges(5, [(0, 1), (0, 2), (1, 3), (2, 4), (2, 3)])
    tree = bfs_tree(g, 0)
    found = check_s_coloring(g, tree, SColoring({1: 0, 2: 1, 3: 0, 4: 0}, 2))
    assert found == [("parent-edge", 3, 4)]
    assert assign_s_coloring(g, tree).s[4] != assign_s_coloring(g, tree).s[3]


@given(st.integers(2, 60), st.floats(0, 0.25), st.integers(0, 10_000))
def test_greedy_coloring_is_proper(n, extra, seed):
    g = random_connected(n, extra, seed)
    tree, _ = build_2hrt(g, 0)
    col = assign_s_coloring(g, tree)
    assert check_s_coloring(g, tree, col) == []
    assert col.color_count <= g.max_degree() ** 2 + 1


def test_schedule_examples():
    path = generate(parse_family("path:n=4"))
    tree, heights, coloring, sched = _gather_setup(path)
    # all path edges are fast and h2 = 0, so t = D - level
    assert sched.t == {1: 2, 2: 1, 3: 0} and sched.spacing == 2
    # chain with a slow node at level 2: (3 - 2) + 1 * 4 + (2 + 1)
    tree = RootedTree(0, [-1, 0, 1, 2], [0, 1, 2, 3])
    heights = TwoHeightMap([2, 2, 1, 1])
    sched = compute_schedule(tree, heights, SColoring({1: 0, 2: 2, 3: 0}, 3), 3)
    assert sched.spacing == 4 and sched.t[2] == 8
    assert sched.t[1] == 2 + 2 * 4 and sched.t[3] == 0 + 4
    assert gathering_window(3, 4, 2) == 9 + 36


def test_centralized_path_and_star():
    path = generate(parse_family("path:n=4"))
    tree, heights, coloring, sched = _gather_setup(path)
    res = run_gather_centralized(path, tree, sched, 0, heights, coloring)
    assert res.messages[0] == {0, 1, 2, 3}
    assert res.rounds <= 3 * 3
    star = generate(parse_family("star:n=7"))
    tree, heights, coloring, sched = _gather_setup(star)
    blocks = [sched.t[v] for v in range(1, 7)]
    assert len(set(blocks)) == 6
    res = run_gather_centralized(star, tree, sched, 0, heights, coloring)
    assert res.messages[0] == set(range(7))


def test_centralized_detects_collision():
    star = generate(parse_family("star:n=4"))
    tree, heights, coloring, sched = _gather_setup(star)
    sched.t.update({1: 0, 2: 0, 3: 0})
    with pytest.raises(GatherCollision, match="did not reach its parent"):
        run_gather_centralized(star, tree, sched, 0, heights, coloring)


@given(st.integers(2, 70), st.floats(0, 0.2), st.integers(0, 10_000))
def test_distributed_matches_centralized(n, extra, seed):
    g = random_connected(n, extra, seed)
    labels, sched, coloring, tree, heights, _ = prepare_gossip_labels(g, 0, GossipConfig(scheme="executor"))
    central = run_gather_centralized(g, tree, sched, 0, heights, coloring)
    assert central.messages[0] == set(range(n))
    trace, progs = run_gather_distributed(g, labels, tree, start=30)
    assert progs[0].messages == set(range(n))
    for v in range(1, n):
        assert progs[v].h2 == heights.h2[v]
        assert progs[v].transmit_round == 30 + sched.transmit_round(v, tree.level[v])
        assert progs[v].h2_round < progs[v].transmit_round
    if coloring.color_count <= g.max_degree():
        assert central.rounds <= 3 * max(tree.level) + 6 * (g.max_degree() + 1) * ceil_log2(n)


def test_dissemination_path4():
    g = generate(parse_family("path:n=4"))
    res = disseminate_parameters(g, 0, scheme="executor")
    assert res.levels == [0, 1, 2, 3]
    assert res.diameters == [3, 3, 3, 3]
    assert len(set(res.terminations)) == 1 and res.tau == res.terminations[0]
    stub = disseminate_parameters(g, 0, mode="stub-size-learning", scheme="executor")
    assert stub.tau - res.tau == STUB_RESERVE_FACTOR * ceil_log2(4) ** 2


@pytest.mark.parametrize("family", ["path:n=4", "path:n=20", "star:n=9", "star-path:D=3,delta=5",
                                    "complete-binary-tree:n=31", "grid:rows=5,cols=6",
                                    "random-connected:n=90,p=0.06,seed=4"])
@pytest.mark.parametrize("mode", ["oracle-injected-D", "stub-size-learning"])
def test_gossip_everyone_learns_everything(family, mode):
    g = generate(parse_family(family))
    res = gossip_pipeline(g, 0, GossipConfig(mode=mode))
    tokens = set(range(g.n))
    assert all(p.known_messages == tokens for p in res.programs)
    assert res.programs[0].sink_received == g.degree(0)
    assert res.gather_start >= res.tau
    assert res.phase_rounds["gathering"] <= res.phase_rounds["gathering_window"]


def test_gossip_sink_count_mismatch_raises():
    g = generate(parse_family("star:n=5"))
    with pytest.raises(SinkCountMismatch):
        # the run stops before the final broadcast origin, where the sink counts its tuples
        gossip_pipeline(g, 0, GossipConfig(), horizon=_truncated_horizon(g))


def _truncated_horizon(g):
    res = gossip_pipeline(g, 0, GossipConfig())
    return res.final_origin
