import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_connected
from radiolabel.hrt import bfs_tree, build_2hrt
from radiolabel.labeling import (
    ACK_WIDTH,
    CORE_WIDTH,
    BipartiteInstance,
    BroadcastLabel,
    GatherLabel,
    LabelError,
    OracleError,
    assign_ack_bits,
    assign_executor_labels,
    assign_express_labels,
    assign_fast_labels,
    derandomize_bipartite,
    express_residue,
    fast_deadline,
    isolated,
    load_table,
    minimal_dominating,
    next_matching,
    required_size,
    save_table,
    table_width,
)
from radiolabel.netgraph import Graph, ceil_log2, generate, parse_family


def test_broadcast_label_round_trip_exhaustive():
    seen = set()
    for bits in itertools.product("01", repeat=CORE_WIDTH):
        text = "".join(bits)
        lab = BroadcastLabel.decode(text)
        assert lab.encode() == text
        seen.add(lab)
        ack = lab.with_ack(1, 0)
        assert len(ack.encode()) == ACK_WIDTH and BroadcastLabel.decode(ack.encode()) == ack
    assert len(seen) == 2 ** CORE_WIDTH


@pytest.mark.parametrize("text", ["", "0101", "01010101", "0123456", "0000000000"])
def test_broadcast_decode_errors(text):
    with pytest.raises(LabelError):
        BroadcastLabel.decode(text)


def test_label_validation():
    with pytest.raises(LabelError):
        BroadcastLabel(join=2)
    with pytest.raises(LabelError):
        BroadcastLabel(on_path=1)
    head = BroadcastLabel().with_ack(0, 0)
    with pytest.raises(LabelError, match="leaf"):
        GatherLabel(head, 3, 0, -1, 0, 0, 1)
    with pytest.raises(LabelError, match="color"):
        GatherLabel(head, 3, 3, 0, 0, 0, 0)
    with pytest.raises(LabelError):
        GatherLabel(BroadcastLabel(), 3, 0, 0, 0, 0, 0)


@given(
    st.integers(1, 300), st.data(), st.integers(0, 1), st.booleans(),
    st.tuples(st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 40)),
)
def test_gather_label_round_trip(delta, data, fast, sink, hints):
    s = data.draw(st.integers(0, delta - 1))
    leaf = data.draw(st.booleans())
    sp, b = (-1, -1) if leaf else (data.draw(st.integers(0, delta - 1)), data.draw(st.integers(0, 1)))
    head = BroadcastLabel(1, 2, 0, 1, 0, 1).with_ack(1, 0)
    lab = GatherLabel(head, delta, s, sp, b, fast, int(leaf), *(hints if sink else (None, None, None)))
    assert GatherLabel.decode(lab.encode()) == lab
    if not sink:
        assert len(lab.encode()) == ACK_WIDTH + 6 + 4 * delta.bit_length()
    text = save_table({0: lab, 1: head})
    assert load_table(text) == {0: lab, 1: head}


@pytest.mark.parametrize(
    "text, needle",
    [
        ("x 0000000\n", "line 1: bad node id"),
        ("0\n", "line 1: missing bitstring"),
        ("0 0000000\n0 0000000\n", "line 2: duplicate"),
        ("0 00000\n", "line 1: broadcast label must be"),
    ],
)
def test_table_load_errors(text, needle):
    with pytest.raises(LabelError, match=needle):
        load_table(text)


def test_table_integer_columns_must_agree():
    head = BroadcastLabel().with_ack(0, 0)
    lab = GatherLabel(head, 2, 1, 0, 1, 0, 0)
    line = save_table({4: lab}).replace(" 2 1 0 1 0 0", " 2 1 0 0 0 0")
    with pytest.raises(LabelError, match="disagree"):
        load_table(line)


def test_bipartite_small_examples():
    single = BipartiteInstance([0], [10, 11], {0: [10, 11]})
    assert derandomize_bipartite(single) == ({0}, {10, 11})
    # two A-nodes sharing one B-node: exactly one must be chosen
    shared = BipartiteInstance([0, 1], [10], {0: [10], 1: [10]})
    a_sel, b_sel = derandomize_bipartite(shared)
    assert len(a_sel) == 1 and b_sel == {10}
    with pytest.raises(ValueError, match="without a neighbor"):
        BipartiteInstance([0], [10, 11], {0: [10]})


@st.composite
def bipartite_instances(draw):
    na = draw(st.integers(1, 12))
    nb = draw(st.integers(1, 40))
    adj = {a: set() for a in range(na)}
    for b in range(nb):
        owners = draw(st.sets(st.integers(0, na - 1), min_size=1, max_size=na))
        for a in owners:
            adj[a].add(100 + b)
    return BipartiteInstance(list(range(na)), [100 + b for b in range(nb)], {a: sorted(v) for a, v in adj.items()})


@given(bipartite_instances())
def test_bipartite_guarantee(inst):
    a_sel, b_sel = derandomize_bipartite(inst)
    assert a_sel <= set(inst.a_nodes)
    # recount exactly-one neighborhoods directly
    brute = {b for b in inst.b_nodes if sum(b in inst.adj_a[a] for a in a_sel) == 1}
    assert b_sel == brute == isolated(inst, a_sel)
    assert len(b_sel) >= required_size(inst)
    assert len(b_sel) >= len(inst.b_nodes) / (15 * max(1, ceil_log2(len(inst.a_nodes))))


def test_minimal_dominating_example():
    # two candidates both cover the single frontier node; the higher id is dropped
    g = Graph.from_edges(3, [(0, 2), (1, 2)])
    assert minimal_dominating({0, 1}, {2}, g) == {0}
    with pytest.raises(OracleError):
        minimal_dominating({0}, {1}, Graph.from_edges(3, [(0, 2), (1, 2)]))


@given(st.integers(3, 30), st.floats(0.05, 0.4), st.integers(0, 10_000))
def test_minimal_dominating_is_minimal(n, extra, seed):
    g = random_connected(n, extra, seed)
    cands = set(range(0, n, 2))
    frontier = {f for c in cands for f in g.neighbors(c) if f % 2 == 1}
    dom = minimal_dominating(cands, frontier, g)
    assert dom <= cands
    covered = lambda ds: {f for d in ds for f in g.neighbors(d) if f in frontier}  # noqa: E731
    assert covered(dom) == frontier
    assert all(covered(dom - {d}) != frontier for d in dom)


def test_oracle_path4():
    g = generate(parse_family("path:n=4"))
    labels, state = assign_executor_labels(g, 0)
    assert [b.dom for b in state.blocks] == [(0,), (1,), (2,)]
    assert state.informed_round == [0, 0, 5, 10]
    assert state.rounds == 11
    assert labels[0] == BroadcastLabel(1, 0, 0, 0, 0, 0)
    assert all(lab.stay == 0 for lab in labels.values())
    assert [lab.lev for lab in labels.values()] == [0, 1, 2, 0]
    assert table_width(labels) == CORE_WIDTH


def test_schedule_arithmetic():
    # n = 16, level 2, on the source's own 2-height: 3 * 2 + (2 - 1) % 3
    assert fast_deadline(2, 3, 3, 16) == 7
    assert fast_deadline(4, 2, 1, 16) == 3 * (4 + 30 * 16) + 0
    assert express_residue(1, 0, 0) == 6
    assert next_matching(10, 3, 6) == 15 and next_matching(15, 3, 6) == 15


@pytest.mark.parametrize("family", ["grid:rows=8,cols=8", "complete-binary-tree:n=63",
                                    "random-connected:n=150,p=0.04,seed=2"])
def test_express_schedule_invariants(family):
    g = generate(parse_family(family))
    tree, heights = build_2hrt(g, 0)
    labels, state = assign_express_labels(g, 0, hrt=(tree, heights))
    assert state.z[0] == 1
    assert state.express_edge_violations(tree, heights) == []
    assert state.deadline_misses() == []
    lg = ceil_log2(g.n)
    seen: dict[tuple[int, int], int] = {}
    for v, z in state.z.items():
        # same level and same z mod 6L imply the same 2-height (gap h2(root) - h2 stays below L)
        if heights.h2[0] - heights.h2[v] < lg:
            key = (tree.level[v], z % (6 * lg))
            assert seen.setdefault(key, heights.h2[v]) == heights.h2[v]


@pytest.mark.parametrize("family", ["path:n=33", "grid:rows=7,cols=9", "star-path:D=3,delta=6",
                                    "random-connected:n=200,p=0.03,seed=11"])
def test_dom_invariants(family):
    g = generate(parse_family(family))
    tree = bfs_tree(g, 0)
    for labels, state in (assign_executor_labels(g, 0, tree=tree), assign_fast_labels(g, 0)):
        lev = state.level
        for rec in state.blocks:
            assert all(lev[d] % 3 == rec.block % 3 for d in rec.dom)
            for d, w in rec.feedback.items():
                assert w in g.neighbors(d) and lev[w] == lev[d] + 1
                assert state.informed_round[w] == 5 * rec.block
                # w heard d alone: no other dominator next to it
                assert [x for x in g.neighbors(w) if x in rec.dom] == [d]
        assert min(state.informed_round) == 0 and all(t >= 0 for t in state.informed_round)
        for v in range(g.n):
            if v != 0:
                assert state.informed_block[v] * 5 <= state.informed_round[v] < state.informed_block[v] * 5 + 5


def test_ack_bits_path_and_star():
    path = generate(parse_family("path:n=4"))
    labels, state = assign_executor_labels(path, 0)
    acked = assign_ack_bits(labels, state.informed_round, bfs_tree(path, 0))
    assert [(x.on_path, x.terminal) for x in acked.values()] == [(1, 0), (1, 0), (1, 0), (1, 1)]
    star = generate(parse_family("star:n=5"))
    labels, state = assign_executor_labels(star, 0)
    acked = assign_ack_bits(labels, state.informed_round, bfs_tree(star, 0))
    assert [(x.on_path, x.terminal) for x in acked.values()] == [(1, 0), (1, 1), (0, 0), (0, 0), (0, 0)]
    assert table_width(acked) == ACK_WIDTH
