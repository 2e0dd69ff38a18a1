"""Gathering towards a sink and gossiping by gather-then-broadcast.

The gathering schedule gives every non-sink node v one transmission block

    t(v) = (D - level(v)) + h2(v) * spacing            if v is a fast child
    t(v) = (D - level(v)) + h2(v) * spacing + s(v) + 1 otherwise

where s is a coloring of the tree that separates siblings and same-level
nodes whose parents could hear each other, and spacing = C + 1 for the color
count C. Blocks have three rounds; a node transmits in round level mod 3.

In the distributed version every node learns its level, D and a common start
round from an acknowledged broadcast issued by the sink, and learns its own
2-height from the tuple sent by its maximal child (marked by s' and b in the
label).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Literal

from .broadcast import (
    PHASE_GOSSIP,
    AcknowledgedProgram,
    ExecutorCore,
    Payload,
    align_up,
)
from .hrt import RootedTree, TwoHeightMap, build_2hrt
from .labeling.labels import BroadcastLabel, GatherLabel
from .labeling.oracle import (
    OracleState,
    assign_ack_bits,
    assign_executor_labels,
    assign_express_labels,
    assign_fast_labels,
)
from .netgraph import Graph, ceil_log2
from .radiosim import NodeProgram, Trace, broadcast_step_name, run

BLOCK_ROUNDS = 3
DisseminationMode = Literal["oracle-injected-D", "stub-size-learning"]
BroadcastScheme = Literal["express", "fast", "executor"]


class GatherCollision(AssertionError):
    pass


class SinkCountMismatch(AssertionError):
    pass


@dataclass
class SColoring:
    s: dict[int, int]
    color_count: int


@dataclass
class GatherSchedule:
    t: dict[int, int]
    spacing: int
    diameter: int
    block_rounds: int = BLOCK_ROUNDS

    def transmit_round(self, v: int, level: int, start: int = 0) -> int:
        return start + self.block_rounds * self.t[v] + level % 3

    def max_block(self) -> int:
        return max(self.t.values(), default=-1)


@dataclass(frozen=True)
class GatherTuple:
    messages: frozenset
    h2: int
    s: int
    level: int


# -- coloring and schedule -------------------------------------------------------

def _conflicts(g: Graph, tree: RootedTree, w: int) -> set[int]:
    """Same-level nodes u with an edge u-p(w) or w-p(u)."""
    lev = tree.level
    out = {u for u in g.neighbors(tree.parent[w]) if lev[u] == lev[w]}
    for x in g.neighbors(w):
        if lev[x] == lev[w] - 1:
            out.update(u for u in g.neighbors(x) if lev[u] == lev[w] and tree.parent[u] == x)
    out.discard(w)
    return out


def assign_s_coloring(g: Graph, tree: RootedTree) -> SColoring:
    s: dict[int, int] = {}
    for layer in tree.levels()[1:]:
        for w in sorted(layer):
            used = {s[u] for u in _conflicts(g, tree, w) if u in s}
            c = 0
            while c in used:
                c += 1
            s[w] = c
    return SColoring(s, max(s.values(), default=0) + 1)


def check_s_coloring(g: Graph, tree: RootedTree, col: SColoring) -> list[tuple[str, int, int]]:
    """Exhaustive check of both coloring clauses; returns offending pairs."""
    bad = []
    groups: dict[tuple[int, int], list[int]] = {}
    for v, c in col.s.items():
        if not 0 <= c < col.color_count:
            bad.append(("range", v, v))
        groups.setdefault((tree.level[v], c), []).append(v)
    for members in groups.values():
        members.sort()
        for i, u in enumerate(members):
            for w in members[i + 1:]:
                if tree.parent[u] == tree.parent[w]:
                    bad.append(("siblings", u, w))
                elif g.has_edge(u, tree.parent[w]) or g.has_edge(w, tree.parent[u]):
                    bad.append(("parent-edge", u, w))
    return bad


def compute_schedule(tree: RootedTree, heights: TwoHeightMap, coloring: SColoring, diameter: int) -> GatherSchedule:
    spacing = coloring.color_count + 1
    t = {}
    for v in range(tree.n):
        if v == tree.root:
            continue
        base = (diameter - tree.level[v]) + heights.h2[v] * spacing
        t[v] = base if heights.is_fast(tree, v) else base + coloring.s[v] + 1
    return GatherSchedule(t, spacing, diameter)


def gathering_window(diameter: int, spacing: int, log_hint: int) -> int:
    """Rounds reserved for gathering; every node computes it from its label and learned D."""
    return BLOCK_ROUNDS * diameter + BLOCK_ROUNDS * spacing * (log_hint + 1)


# -- labels ----------------------------------------------------------------------

def max_child(tree: RootedTree, heights: TwoHeightMap, kids: list[list[int]], v: int) -> int | None:
    if not kids[v]:
        return None
    top = max(heights.h2[c] for c in kids[v])
    return min(c for c in kids[v] if heights.h2[c] == top)


def assign_gather_labels(
    g: Graph,
    tree: RootedTree,
    heights: TwoHeightMap,
    coloring: SColoring,
    broadcast_table: dict[int, BroadcastLabel],
) -> dict[int, GatherLabel]:
    sink = tree.root
    kids = tree.children()
    delta = coloring.color_count
    table = {}
    for v in g.nodes():
        u = max_child(tree, heights, kids, v)
        if u is None:
            s_prime, b, leaf = -1, -1, 1
        else:
            s_prime, b, leaf = coloring.s[u], heights.h2[v] - heights.h2[u], 0
        sink_fields: dict[str, Any] = {}
        if v == sink:
            sink_fields = dict(
                sink_degree=g.degree(v),
                diameter_hint=max(tree.level),
                log_hint=ceil_log2(g.n),
            )
        table[v] = GatherLabel(
            broadcast_table[v],
            delta,
            coloring.s.get(v, 0),
            s_prime,
            b,
            int(heights.is_fast(tree, v)),
            leaf,
            **sink_fields,
        )
    return table


# -- centralized gathering -------------------------------------------------------

class CentralGatherProgram(NodeProgram):
    def __init__(self, token: Any, level: int, transmit_round: int | None, h2: int, s: int):
        self.messages = {token}
        self.level = level
        self.round = transmit_round
        self.h2, self.s = h2, s

    def wake(self, t: int) -> int | None:
        return self.round if self.round is not None and self.round >= t else None

    def act(self, t: int) -> Payload | None:
        if t != self.round:
            return None
        return Payload("gather", self.level % 3, value=GatherTuple(frozenset(self.messages), self.h2, self.s, self.level))

    def hear(self, t: int, payload: Payload) -> None:
        if payload.kind == "gather" and payload.value.level == self.level + 1:
            self.messages |= payload.value.messages


@dataclass
class GatherRun:
    trace: Trace
    messages: list[set]
    rounds: int  # last transmission round + 1


def parent_misses(trace: Trace, tree: RootedTree, kind: str = "gather") -> list[tuple[int, int]]:
    """(round, sender) for gather transmissions that the sender's parent did not receive."""
    out = []
    for t in sorted(trace.rounds):
        rec = trace.rounds[t]
        for v, p in rec.transmitters.items():
            if isinstance(p, Payload) and p.kind == kind and rec.received.get(tree.parent[v]) != v:
                out.append((t, v))
    return out


def run_gather_centralized(
    g: Graph,
    tree: RootedTree,
    schedule: GatherSchedule,
    sink: int,
    heights: TwoHeightMap | None = None,
    coloring: SColoring | None = None,
    tokens: list[Any] | None = None,
) -> GatherRun:
    if tree.root != sink:
        raise ValueError("tree must be rooted at the sink")
    tokens = tokens if tokens is not None else list(g.nodes())
    progs = [
        CentralGatherProgram(
            tokens[v],
            tree.level[v],
            None if v == sink else schedule.transmit_round(v, tree.level[v]),
            heights.h2[v] if heights else 0,
            coloring.s.get(v, 0) if coloring else 0,
        )
        for v in g.nodes()
    ]
    horizon = BLOCK_ROUNDS * (schedule.max_block() + 2)
    trace = run(g, progs, max(horizon, 1))
    misses = parent_misses(trace, tree)
    if misses:
        t, v = misses[0]
        raise GatherCollision(f"node {v}'s transmission in round {t} did not reach its parent {tree.parent[v]}")
    return GatherRun(trace, [p.messages for p in progs], trace.last_transmission_round() + 1)


# -- distributed gathering -------------------------------------------------------

class GatherProgram(NodeProgram):
    """Distributed gathering; needs level, D and the start round before it can act."""

    def __init__(self, label: GatherLabel, token: Any, *, level: int | None = None,
                 diameter: int | None = None, start: int | None = None):
        self.label = label
        self.messages = {token}
        self.h2: int | None = 0 if label.leaf else None
        self.h2_round: int | None = -1 if label.leaf else None
        self.level = level
        self.diameter = diameter
        self.start = start
        self.sent_round: int | None = None
        self.heard_up = 0  # gather tuples received from the level below
        self.senders_h2: list[tuple[int, int]] = []

    def configure(self, level: int, diameter: int, start: int) -> None:
        self.level, self.diameter, self.start = level, diameter, start

    @property
    def configured(self) -> bool:
        return self.start is not None

    @property
    def block(self) -> int | None:
        if self.label.is_sink or self.h2 is None or not self.configured:
            return None
        t = (self.diameter - self.level) + self.h2 * self.label.spacing
        return t if self.label.fast else t + self.label.s + 1

    @property
    def transmit_round(self) -> int | None:
        b = self.block
        return None if b is None else self.start + BLOCK_ROUNDS * b + self.level % 3

    def wake(self, t: int) -> int | None:
        r = self.transmit_round
        return r if r is not None and self.sent_round is None and r >= t else None

    def act(self, t: int) -> Payload | None:
        if self.sent_round is not None or t != self.transmit_round:
            return None
        self.sent_round = t
        tup = GatherTuple(frozenset(self.messages), self.h2, self.label.s, self.level)
        return Payload("gather", self.level % 3, value=tup)

    def hear(self, t: int, payload: Payload) -> None:
        if payload.kind != "gather" or not self.configured:
            return
        tup: GatherTuple = payload.value
        if tup.level != self.level + 1:
            return
        self.messages |= tup.messages
        self.heard_up += 1
        if self.h2 is None and tup.s == self.label.s_prime:
            self.h2 = tup.h2 + self.label.b
            self.h2_round = t


# -- dissemination and gossip ----------------------------------------------------

STUB_RESERVE_FACTOR = 15  # reserved rounds per log_hint^2 in stub-size-learning mode


def stub_reserve(log_hint: int, mode: DisseminationMode) -> int:
    return STUB_RESERVE_FACTOR * log_hint * log_hint if mode == "stub-size-learning" else 0


@dataclass
class GossipConfig:
    scheme: BroadcastScheme = "express"
    mode: DisseminationMode = "oracle-injected-D"
    seed: int = 0
    express_c: float = 60.0
    retry_budget: int = 50
    horizon_factor: int = 8


class GossipProgram(NodeProgram):
    """Dissemination (acknowledged broadcast), gathering, then broadcast of the union."""

    def __init__(self, label: GatherLabel, token: Any, *, mode: DisseminationMode = "oracle-injected-D"):
        self.label = label
        self.token = token
        self.mode = mode
        self.is_sink = label.is_sink
        params = (label.diameter_hint, label.log_hint) if self.is_sink else None
        self.ack = AcknowledgedProgram(label.broadcast, is_source=self.is_sink, message=params)
        self.gather = GatherProgram(label, token)
        self.final = ExecutorCore(label.broadcast, phase=PHASE_GOSSIP, origin=None)
        self.tau: int | None = None
        self.gather_start: int | None = None
        self.final_origin: int | None = None
        self.sink_received: int | None = None
        self._maybe_configure()

    # learned values
    @property
    def level(self) -> int | None:
        return self.ack.level

    @property
    def diameter(self) -> int | None:
        return None if self.ack.message is None else self.ack.message[0]

    @property
    def known_messages(self) -> set:
        out = set(self.gather.messages)
        if self.final.message is not None:
            out |= self.final.message.value
        return out

    def _maybe_configure(self) -> None:
        if self.tau is not None or self.ack.termination is None:
            return
        diameter, log_hint = self.ack.message
        self.tau = self.ack.termination
        self.gather_start = self.tau + stub_reserve(log_hint, self.mode)
        self.gather.configure(self.ack.level, diameter, self.gather_start)
        window = gathering_window(diameter, self.label.spacing, log_hint)
        self.final_origin = align_up(self.gather_start + window - 1)
        self.final.origin = self.final_origin

    def wake(self, t: int) -> int | None:
        cands = [self.ack.wake(t), self.gather.wake(t), self.final.wake(t)]
        if self.is_sink and self.final_origin is not None and not self.final.informed and self.final_origin >= t:
            cands.append(self.final_origin)
        cands = [c for c in cands if c is not None]
        return min(cands) if cands else None

    def act(self, t: int) -> Payload | None:
        if self.is_sink and t == self.final_origin and not self.final.informed:
            self.sink_received = self.gather.heard_up
            self.final.start_as_source(frozenset(self.gather.messages))
        for part in (self.ack, self.gather, self.final):
            out = part.act(t)
            if out is not None:
                return out
        return None

    def hear(self, t: int, payload: Payload) -> None:
        if payload.kind == "gather":
            self.gather.hear(t, payload)
        elif payload.phase == PHASE_GOSSIP:
            self.final.hear(t, payload)
        else:
            self.ack.hear(t, payload)
            self._maybe_configure()


def broadcast_labels_for(
    g: Graph,
    source: int,
    scheme: BroadcastScheme,
    hrt: tuple[RootedTree, TwoHeightMap],
    seed: int = 0,
    express_c: float = 60.0,
    retry_budget: int = 50,
) -> tuple[dict[int, BroadcastLabel], OracleState]:
    if scheme == "express":
        return assign_express_labels(g, source, seed=seed, retry_budget=retry_budget, c=express_c, hrt=hrt)
    if scheme == "fast":
        return assign_fast_labels(g, source, hrt=hrt)
    return assign_executor_labels(g, source, tree=hrt[0])


@dataclass
class DisseminationResult:
    labels: dict[int, BroadcastLabel]
    tau: int
    levels: list[int | None]
    diameters: list[int | None]
    terminations: list[int | None]
    trace: Trace
    state: OracleState


def disseminate_parameters(
    g: Graph,
    sink: int,
    mode: DisseminationMode = "oracle-injected-D",
    scheme: BroadcastScheme = "express",
    seed: int = 0,
    hrt: tuple[RootedTree, TwoHeightMap] | None = None,
) -> DisseminationResult:
    """Acknowledged broadcast of (D, log hint) from the sink; nodes learn their level from hop counters."""
    hrt = hrt if hrt is not None else build_2hrt(g, sink)
    table, state = broadcast_labels_for(g, sink, scheme, hrt, seed=seed)
    table = assign_ack_bits(table, state.informed_round, hrt[0])
    params = (max(hrt[0].level), ceil_log2(g.n))
    progs = [AcknowledgedProgram(table[v], is_source=(v == sink), message=params if v == sink else None) for v in g.nodes()]
    horizon = 8 * (2 * state.rounds + 2 * max(hrt[0].level) + 64)
    trace = run(g, progs, horizon)
    terms = [p.termination for p in progs]
    tau = terms[sink]
    if tau is not None:
        tau += stub_reserve(params[1], mode)
    return DisseminationResult(
        table, tau, [p.level for p in progs],
        [None if p.message is None else p.message[0] for p in progs], terms, trace, state,
    )


@dataclass
class GossipResult:
    trace: Trace
    labels: dict[int, GatherLabel]
    schedule: GatherSchedule
    coloring: SColoring
    tree: RootedTree
    heights: TwoHeightMap
    broadcast_state: OracleState
    programs: list[GossipProgram]
    tau: int
    gather_start: int
    final_origin: int
    rounds: int
    phase_rounds: dict[str, int] = field(default_factory=dict)

    def step_name(self) -> Callable[[int], str]:
        start, final = self.gather_start, self.final_origin

        def name(t: int) -> str:
            if start <= t < final:
                return "gather"
            return ("dissemination:" if t < start else "") + broadcast_step_name(t)
        return name


def prepare_gossip_labels(g: Graph, sink: int, config: GossipConfig | None = None):
    config = config or GossipConfig()
    tree, heights = build_2hrt(g, sink)
    table, state = broadcast_labels_for(g, sink, config.scheme, (tree, heights), seed=config.seed,
                                        express_c=config.express_c, retry_budget=config.retry_budget)
    table = assign_ack_bits(table, state.informed_round, tree)
    coloring = assign_s_coloring(g, tree)
    labels = assign_gather_labels(g, tree, heights, coloring, table)
    schedule = compute_schedule(tree, heights, coloring, max(tree.level))
    return labels, schedule, coloring, tree, heights, state


def gossip_horizon(labels: dict[int, GatherLabel], sink: int, n: int, mode: DisseminationMode,
                   broadcast_bound: int, factor: int = 8) -> int:
    """Cap on simulated rounds, computed from labels only: two broadcasts, the Stop path, reserve and window."""
    sl = labels[sink]
    window = gathering_window(sl.diameter_hint, sl.spacing, sl.log_hint)
    return factor * (3 * broadcast_bound + 2 * sl.diameter_hint + 64 + stub_reserve(sl.log_hint, mode) + window)


def simulate_gossip(g: Graph, labels: dict[int, GatherLabel], sink: int, horizon: int,
                    mode: DisseminationMode = "oracle-injected-D", tokens: list[Any] | None = None,
                    dense: bool = False) -> tuple[Trace, list[GossipProgram]]:
    tokens = tokens if tokens is not None else list(g.nodes())
    progs = [GossipProgram(labels[v], tokens[v], mode=mode) for v in g.nodes()]
    return run(g, progs, horizon, dense=dense), progs


def gossip_pipeline(g: Graph, sink: int, config: GossipConfig | None = None, tokens: list[Any] | None = None,
                    horizon: int | None = None) -> GossipResult:
    config = config or GossipConfig()
    labels, schedule, coloring, tree, heights, state = prepare_gossip_labels(g, sink, config)
    if horizon is None:
        horizon = gossip_horizon(labels, sink, g.n, config.mode, state.rounds, config.horizon_factor)
    trace, progs = simulate_gossip(g, labels, sink, horizon, config.mode, tokens)
    sink_prog = progs[sink]
    if sink_prog.tau is None:
        raise AssertionError("dissemination did not terminate at the sink")
    if sink_prog.sink_received != g.degree(sink):
        raise SinkCountMismatch(f"sink received {sink_prog.sink_received} child tuples, expected {g.degree(sink)}")
    return GossipResult(trace, labels, schedule, coloring, tree, heights, state, progs,
                        sink_prog.tau, sink_prog.gather_start, sink_prog.final_origin,
                        trace.last_transmission_round() + 1, phase_rounds(trace, sink_prog))


def phase_rounds(trace: Trace, sink_prog: GossipProgram) -> dict[str, int]:
    start, final = sink_prog.gather_start, sink_prog.final_origin
    last_gather = max((t for t in trace.rounds if start <= t < final), default=start - 1)
    return {
        "dissemination": start,
        "gathering": last_gather + 1 - start,
        "gathering_window": final - start,
        "broadcast": trace.last_transmission_round() + 1 - final,
    }


def run_gather_distributed(g: Graph, labels: dict[int, GatherLabel], tree: RootedTree,
                           tokens: list[Any] | None = None, start: int = 0) -> tuple[Trace, list[GatherProgram]]:
    """Distributed gathering with level, D and start handed to the programs (dissemination skipped)."""
    tokens = tokens if tokens is not None else list(g.nodes())
    diameter = max(tree.level)
    progs = [GatherProgram(labels[v], tokens[v], level=tree.level[v], diameter=diameter, start=start) for v in g.nodes()]
    sink_label = labels[tree.root]
    window = gathering_window(diameter, sink_label.spacing, sink_label.log_hint)
    trace = run(g, progs, start + window)
    return trace, progs
