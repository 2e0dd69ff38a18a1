"""Label assignment by centralized co-simulation of the levelled executor.

Every block has five steps (broadcast, feedback, go, fast, rescue). In block
``r`` only nodes whose level is congruent to ``r`` mod 3 may act as
dominators; a node accepts the broadcast message only from the level right
above it. The oracle replays exactly what the node programs will do and
writes the instruction bits that make the replay come true.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Literal

from ..hrt import RootedTree, TwoHeightMap, bfs_tree, build_2hrt
from ..netgraph import Graph, ceil_log2
from .bipartite import BipartiteInstance, derandomize_bipartite
from .labels import BroadcastLabel, LabelTable

STEPS_PER_BLOCK = 5
GoMode = Literal["constructive", "express", "none"]
DeadlineMode = Literal["none", "x", "z"]


class OracleError(AssertionError):
    pass


class BudgetExhausted(RuntimeError):
    def __init__(self, message: str, best: OracleState | None):
        super().__init__(message)
        self.best = best


def minimal_dominating(candidates: set[int] | list[int], frontier: set[int], g: Graph) -> set[int]:
    """Inclusion-minimal subset of ``candidates`` covering ``frontier``; prunes in descending id order."""
    cover: dict[int, int] = {f: 0 for f in frontier}
    reach: dict[int, list[int]] = {}
    for c in candidates:
        reach[c] = [f for f in g.neighbors(c) if f in cover]
        for f in reach[c]:
            cover[f] += 1
    missing = [f for f, k in cover.items() if k == 0]
    if missing:
        raise OracleError(f"frontier nodes {sorted(missing)[:5]} have no candidate neighbor")
    kept = set(reach)
    for c in sorted(reach, reverse=True):
        if all(cover[f] >= 2 for f in reach[c]):
            kept.discard(c)
            for f in reach[c]:
                cover[f] -= 1
    return kept


def fast_deadline(level: int, h2_root: int, h2: int, n: int) -> int:
    """Block by which a node must hold the message under the fast schedule."""
    lg = ceil_log2(n)
    return 3 * (level + 30 * lg * lg * (h2_root - h2)) + (level - 1) % 3


def express_residue(level: int, h2_root: int, h2: int) -> int:
    return 6 * (level + (h2_root - h2)) + (level - 1) % 3


def next_matching(lower: int, residue: int, modulus: int) -> int:
    """Smallest z >= lower with z ≡ residue (mod modulus)."""
    return lower + (residue - lower) % modulus


@dataclass
class BlockRecord:
    block: int
    dom: tuple[int, ...]
    feedback: dict[int, int]  # dominator -> feedback node
    go: tuple[int, ...] = ()
    fast: tuple[int, ...] = ()
    rescue: dict[int, int] = field(default_factory=dict)  # rescuer -> intended child
    fast_targets: dict[int, int] = field(default_factory=dict)  # parent -> intended child
    informed: tuple[int, ...] = ()


@dataclass
class StageRecord:
    stage: int
    level: int
    first_block: int
    last_block: int
    initial_b: int
    left_uninformed: int


@dataclass
class OracleState:
    n: int
    source: int
    level: list[int]
    go_mode: str
    deadline_mode: str
    join: list[int]
    stay: list[int]
    go: list[int]
    fast: list[int]
    rescue: list[int]
    informed_round: list[int]
    informed_block: list[int]
    blocks: list[BlockRecord] = field(default_factory=list)
    stages: list[StageRecord] = field(default_factory=list)
    deadline: dict[int, int] = field(default_factory=dict)
    z: dict[int, int] = field(default_factory=dict)  # express schedule values, including track starts
    stage_blocks: int = 0
    seed: int | None = None
    attempts: int = 1

    @property
    def completion_round(self) -> int:
        return max(self.informed_round)

    @property
    def rounds(self) -> int:
        return self.completion_round + 1

    @property
    def completion_block(self) -> int:
        return max(self.informed_block)

    def labels(self) -> LabelTable:
        return {
            v: BroadcastLabel(self.join[v], self.level[v] % 3, self.stay[v], self.go[v], self.fast[v], self.rescue[v])
            for v in range(self.n)
        }

    def express_edge_violations(self, tree: RootedTree, heights: TwoHeightMap) -> list[tuple[int, int, int]]:
        """(v, z(p(v)), z(v)) for fast edges breaking z(p) < z(v) <= z(p) + 7."""
        bad = []
        for v in range(self.n):
            p = tree.parent[v]
            if p >= 0 and heights.h2[v] == heights.h2[p]:
                zp, zv = self.z.get(p), self.z.get(v)
                if zp is None or zv is None or not zp < zv <= zp + 7:
                    bad.append((v, zp, zv))
        return bad

    def deadline_misses(self) -> list[tuple[int, int, int]]:
        """(node, deadline block, informed block) for every missed deadline."""
        return [(v, d, self.informed_block[v]) for v, d in sorted(self.deadline.items()) if self.informed_block[v] > d]


class ExecutorSimulation:
    def __init__(
        self,
        g: Graph,
        source: int,
        tree: RootedTree,
        heights: TwoHeightMap | None = None,
        *,
        go_mode: GoMode = "constructive",
        deadline_mode: DeadlineMode = "none",
        seed: int | None = None,
        max_blocks: int | None = None,
        deadline_override: dict[int, int] | None = None,
    ):
        if tree.root != source:
            raise ValueError("tree must be rooted at the source")
        if deadline_mode != "none" and heights is None:
            raise ValueError("deadline schedules need 2-heights")
        self.g = g
        self.source = source
        self.tree = tree
        self.heights = heights
        self.go_mode = go_mode
        self.deadline_mode = deadline_mode
        self.rng = random.Random(seed)
        self.seed = seed
        n = g.n
        self.lg = ceil_log2(n)
        self.stage_len = 3 * 15 * self.lg * self.lg  # each level class sees 15 lg^2 active blocks per stage
        self.modulus = 6 * self.lg
        self.level = tree.level
        self.kids = tree.children()
        self.max_blocks = max_blocks if max_blocks is not None else 8 * self._block_bound() + 64
        self.state = OracleState(
            n, source, list(tree.level), go_mode, deadline_mode,
            [0] * n, [0] * n, [0] * n, [0] * n, [0] * n, [-1] * n, [-1] * n,
            stage_blocks=self.stage_len, seed=seed,
        )
        self.state.join[source] = 1
        self.state.informed_round[source] = 0
        self.state.informed_block[source] = -1
        self.z: dict[int, int] = self.state.z
        self.due: dict[int, list[int]] = {}
        self._stage_meta: dict[int, tuple[int, int]] = {}
        self.deadline_override = dict(deadline_override or {})

    def _block_bound(self) -> int:
        ecc = max(self.level)
        if self.deadline_mode == "x":
            return 3 * (ecc + 30 * self.lg * self.lg * self.heights.h2[self.source]) + 3
        return 2 * self.stage_len * (ecc + 1)

    def _is_fast_child(self, v: int) -> bool:
        return v != self.source and self.heights.h2[v] == self.heights.h2[self.tree.parent[v]]

    def _fast_child(self, p: int) -> int | None:
        for c in self.kids[p]:
            if self.heights.h2[c] == self.heights.h2[p]:
                return c
        return None

    def _prepare_deadlines(self) -> None:
        if self.deadline_mode == "x":
            h2 = self.heights.h2
            for v in range(self.g.n):
                if v != self.source:
                    x = self.deadline_override.get(v, fast_deadline(self.level[v], h2[self.source], h2[v], self.g.n))
                    self.state.deadline[v] = x
                    if self._is_fast_child(v):
                        self.due.setdefault(x, []).append(v)
        elif self.deadline_mode == "z":
            self.z[self.source] = 1
            self._propagate(self.source)

    def _residue(self, v: int) -> int:
        h2 = self.heights.h2
        return express_residue(self.level[v], h2[self.source], h2[v])

    def _on_informed(self, v: int, block: int) -> None:
        if self.deadline_mode != "z":
            return
        if not self._is_fast_child(v):
            # a fast track starts here: anchor its schedule at the node's own reception
            self.z[v] = next_matching(block, self._residue(v), self.modulus)
        if v in self.z:
            self._propagate(v)

    def _propagate(self, p: int) -> None:
        # p is informed and z(p) is known; walk down its fast track
        while True:
            c = self._fast_child(p)
            if c is None or c in self.z:
                return
            zc = next_matching(max(self.state.informed_block[p], self.z[p]) + 1, self._residue(c), self.modulus)
            self.z[c] = zc
            self.state.deadline[c] = zc
            self.due.setdefault(zc, []).append(c)
            if self.state.informed_round[c] < 0:
                return
            p = c

    def run(self) -> OracleState:
        g, st = self.g, self.state
        informed = [False] * g.n
        informed[self.source] = True
        remaining = g.n - 1
        dom_prev: dict[int, set[int]] = {0: set(), 1: set(), 2: set()}
        fb_prev: dict[int, dict[int, int]] = {0: {}, 1: {}, 2: {}}
        fresh: set[int] = {self.source}  # informed in the previous block
        stage_a: dict[int, set[int]] = {}
        stage_b0: dict[int, set[int]] = {}
        self._prepare_deadlines()
        r = 0
        while remaining > 0:
            if r > self.max_blocks:
                raise OracleError(f"broadcast unfinished after {self.max_blocks} blocks ({remaining} uninformed)")
            cls = r % 3
            candidates = dom_prev[cls] | {v for v in fresh if self.level[v] % 3 == cls}
            frontier = {f for c in candidates for f in g.neighbors(c)
                        if not informed[f] and self.level[f] == self.level[c] + 1}
            dom = minimal_dominating(candidates, frontier, g)
            for v in fresh:
                if self.level[v] % 3 == cls:
                    st.join[v] = int(v in dom)
            for d, w in fb_prev[cls].items():
                st.stay[w] = int(d in dom)
            uninformed_at_start = {f for f in frontier}

            # broadcast step
            cover: dict[int, list[int]] = {}
            for d in dom:
                for f in g.neighbors(d):
                    if f in frontier:
                        cover.setdefault(f, []).append(d)
            newly: list[int] = []
            recruits: dict[int, list[int]] = {}
            for f, ds in cover.items():
                if len(ds) == 1:
                    recruits.setdefault(ds[0], []).append(f)
                    newly.append(f)
            feedback = {}
            for d in dom:
                if d not in recruits:
                    raise OracleError(f"dominator {d} has no uniquely informed node in block {r}")
                feedback[d] = min(recruits[d])
            for f in newly:
                informed[f] = True
                st.informed_round[f] = STEPS_PER_BLOCK * r
                st.informed_block[f] = r
            rec = BlockRecord(r, tuple(sorted(dom)), feedback)

            # go step
            go_tx = self._choose_go(r, cls, dom, informed, stage_a, stage_b0)
            for d in go_tx:
                st.go[feedback[d]] = 1
            # fast and rescue steps are decided from the state at the start of the block
            fast_tx, rescue_tx = self._choose_fast(r, dom, frontier, uninformed_at_start, informed, rec)
            for d in fast_tx:
                st.fast[feedback[d]] = 1
            for d in rescue_tx:
                st.rescue[feedback[d]] = 1
            for step, senders in ((2, go_tx), (3, fast_tx), (4, rescue_tx)):
                newly += self._deliver(r, step, senders, informed)
            rec.go = tuple(sorted(go_tx))
            rec.fast = tuple(sorted(fast_tx))
            rec.informed = tuple(sorted(newly))
            st.blocks.append(rec)
            remaining -= len(newly)
            for f in sorted(newly):
                self._on_informed(f, r)
            dom_prev[cls] = dom
            fb_prev[cls] = feedback
            fresh = set(newly)
            r += 1
        self._close_stages(stage_a, stage_b0, informed, r)
        return st

    def _deliver(self, r: int, step: int, senders: set[int], informed: list[bool]) -> list[int]:
        hits: dict[int, int] = {}
        for d in senders:
            for f in self.g.neighbors(d):
                if not informed[f] and self.level[f] == self.level[d] + 1:
                    hits[f] = hits.get(f, 0) + 1
        got = sorted(f for f, k in hits.items() if k == 1)
        for f in got:
            informed[f] = True
            self.state.informed_round[f] = STEPS_PER_BLOCK * r + step
            self.state.informed_block[f] = r
        return got

    def _choose_go(self, r, cls, dom, informed, stage_a, stage_b0) -> set[int]:
        if self.go_mode == "none" or not dom:
            return set()
        if self.go_mode == "express":
            p_r = self.rng.randint(1, self.lg)
            prob = 2.0 ** -p_r
            return {d for d in sorted(dom) if self.rng.random() < prob}
        stage, offset = divmod(r, self.stage_len)
        by_level: dict[int, list[int]] = {}
        for d in dom:
            by_level.setdefault(self.level[d], []).append(d)
        chosen: set[int] = set()
        if offset < 3:
            self._close_stages(stage_a, stage_b0, informed, r, only_class=cls)
            for lev, members in by_level.items():
                stage_a[lev] = set(members)
                stage_b0[lev] = self._up_uninformed(members, informed)
                self._stage_meta[lev] = (stage, r)
        for lev, members in sorted(by_level.items()):
            surviving = sorted(set(members) & stage_a.get(lev, set()))
            if not surviving:
                continue
            adj = {a: [f for f in self.g.neighbors(a) if not informed[f] and self.level[f] == lev + 1] for a in surviving}
            bset = sorted({f for fs in adj.values() for f in fs})
            if not bset:
                continue
            a_sel, _ = derandomize_bipartite(BipartiteInstance(surviving, bset, adj))
            chosen |= a_sel
        return chosen

    def _up_uninformed(self, members, informed) -> set[int]:
        return {f for a in members for f in self.g.neighbors(a) if not informed[f] and self.level[f] == self.level[a] + 1}

    def _close_stages(self, stage_a, stage_b0, informed, r, only_class: int | None = None) -> None:
        for lev in sorted(stage_b0):
            if only_class is not None and lev % 3 != only_class:
                continue
            stage, first = self._stage_meta[lev]
            left = sum(1 for f in stage_b0[lev] if not informed[f])
            self.state.stages.append(StageRecord(stage, lev, first, r - 1, len(stage_b0[lev]), left))
            del stage_b0[lev]
            stage_a.pop(lev, None)

    def _choose_fast(self, r, dom, frontier, waiting, informed, rec: BlockRecord) -> tuple[set[int], set[int]]:
        fast_tx: set[int] = set()
        rescue_tx: set[int] = set()
        for v in self.due.pop(r, []):
            if v not in waiting:
                continue  # informed before this block, or parent not yet informed
            p = self.tree.parent[v]
            if p in dom:
                fast_tx.add(p)
                rec.fast_targets[p] = v
            else:
                helpers = sorted(u for u in self.g.neighbors(v) if u in dom and self.level[u] == self.level[p])
                if not helpers:
                    raise OracleError(f"no dominator next to uninformed frontier node {v} in block {r}")
                u = helpers[0]
                if u in rec.rescue:
                    raise OracleError(f"rescuer {u} already assigned to {rec.rescue[u]} in block {r}")
                rec.rescue[u] = v
                rescue_tx.add(u)
        return fast_tx, rescue_tx


def assign_executor_labels(
    g: Graph,
    source: int,
    go_mode: GoMode = "constructive",
    seed: int | None = None,
    tree: RootedTree | None = None,
) -> tuple[LabelTable, OracleState]:
    tree = tree if tree is not None else bfs_tree(g, source)
    state = ExecutorSimulation(g, source, tree, go_mode=go_mode, seed=seed).run()
    return state.labels(), state


def assign_fast_labels(
    g: Graph,
    source: int,
    hrt: tuple[RootedTree, TwoHeightMap] | None = None,
) -> tuple[LabelTable, OracleState]:
    tree, heights = hrt if hrt is not None else build_2hrt(g, source)
    state = ExecutorSimulation(g, source, tree, heights, go_mode="constructive", deadline_mode="x").run()
    misses = state.deadline_misses()
    if misses:
        v, d, got = misses[0]
        raise OracleError(f"node {v} informed in block {got}, after its deadline {d} ({len(misses)} misses)")
    return state.labels(), state


def express_round_bound(g: Graph, source: int, c: float) -> float:
    lg = ceil_log2(g.n)
    return c * (g.eccentricity(source) + lg * lg)


def assign_express_labels(
    g: Graph,
    source: int,
    seed: int = 0,
    retry_budget: int = 50,
    c: float = 60.0,
    hrt: tuple[RootedTree, TwoHeightMap] | None = None,
) -> tuple[LabelTable, OracleState]:
    tree, heights = hrt if hrt is not None else build_2hrt(g, source)
    bound = express_round_bound(g, source, c)
    best: OracleState | None = None
    for attempt in range(retry_budget):
        sim = ExecutorSimulation(g, source, tree, heights, go_mode="express", deadline_mode="z", seed=seed + attempt)
        try:
            state = sim.run()
        except OracleError:
            continue
        state.attempts = attempt + 1
        if best is None or state.rounds < best.rounds:
            best = state
        if state.rounds <= bound and not state.deadline_misses():
            return state.labels(), state
    raise BudgetExhausted(f"no express schedule within {bound:.0f} rounds after {retry_budget} seeds", best)


def assign_ack_bits(table: LabelTable, informed_round: dict[int, int] | list[int], tree: RootedTree) -> LabelTable:
    """Mark the tree path from the source to the latest informed non-source node (lowest id on ties)."""
    times = dict(enumerate(informed_round)) if isinstance(informed_round, list) else dict(informed_round)
    if len(times) > 1:
        times.pop(tree.root, None)  # the source ties at round 0 on stars; Stop must come from a receiver
    last = max(times.values())
    terminal = min(v for v, t in times.items() if t == last)
    path = set(tree.path_from_root(terminal))
    return {
        v: lab.with_ack(int(v in path), int(v == terminal))
        for v, lab in table.items()
    }
