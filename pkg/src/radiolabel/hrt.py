"""BFS trees, 2-heights and elimination of same-height sharing violations.

A tree edge (p(v), v) is *fast* when h2(v) == h2(p(v)) and *slow* otherwise.
The property enforced by :func:`build_2hrt`: no two distinct same-level nodes
u, u' that are both fast children with a common 2-height have a common
neighbor on the level above.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Literal

from .netgraph import Graph, ceil_log2

FAST, SLOW = "fast", "slow"


class PotentialError(AssertionError):
    pass


@dataclass
class RootedTree:
    root: int
    parent: list[int]  # parent[root] == -1
    level: list[int]

    @property
    def n(self) -> int:
        return len(self.parent)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(v)
        return kids

    def height(self) -> int:
        return max(self.level)

    def levels(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.height() + 1)]
        for v, l in enumerate(self.level):
            out[l].append(v)
        return out

    def path_from_root(self, v: int) -> list[int]:
        path = [v]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def copy(self) -> RootedTree:
        return RootedTree(self.root, list(self.parent), list(self.level))

    def is_bfs_tree_of(self, g: Graph) -> bool:
        dist = g.distances(self.root)
        if dist != self.level or self.parent[self.root] != -1:
            return False
        return all(
            v == self.root or (g.has_edge(v, self.parent[v]) and self.level[self.parent[v]] == self.level[v] - 1)
            for v in g.nodes()
        )


@dataclass
class TwoHeightMap:
    h2: list[int]

    def edge_class(self, tree: RootedTree, v: int) -> str:
        return FAST if self.h2[v] == self.h2[tree.parent[v]] else SLOW

    def is_fast(self, tree: RootedTree, v: int) -> bool:
        return v != tree.root and self.h2[v] == self.h2[tree.parent[v]]

    def max(self) -> int:
        return max(self.h2)


@dataclass(frozen=True, order=True)
class Violation:
    kind: Literal["a", "b"]
    u: int
    u2: int
    v: int


def bfs_tree(g: Graph, root: int) -> RootedTree:
    dist = g.distances(root)
    parent = [-1] * g.n
    for v in g.nodes():
        if v != root:
            parent[v] = next(w for w in g.neighbors(v) if dist[w] == dist[v] - 1)
    return RootedTree(root, parent, dist)


def two_height_of(child_heights: list[int]) -> int:
    if not child_heights:
        return 0
    top = max(child_heights)
    return top + 1 if child_heights.count(top) > 1 else top


def compute_two_heights(tree: RootedTree) -> TwoHeightMap:
    kids = tree.children()
    h2 = [0] * tree.n
    for v in sorted(range(tree.n), key=lambda x: -tree.level[x]):
        h2[v] = two_height_of([h2[c] for c in kids[v]])
    return TwoHeightMap(h2)


def potential(g: Graph, tree: RootedTree, heights: TwoHeightMap, level: int, offset: int = 0) -> int:
    """Sum of h2(u) + offset over level-``level`` nodes u joined to their parent by a fast edge."""
    return sum(
        heights.h2[u] + offset
        for u in g.nodes()
        if tree.level[u] == level and level > 0 and heights.is_fast(tree, u)
    )


def check_star_property(g: Graph, tree: RootedTree, heights: TwoHeightMap) -> list[Violation]:
    """Exhaustive enumeration: every same-level fast pair with equal 2-heights sharing an upper neighbor."""
    found = []
    h2, par, lev = heights.h2, tree.parent, tree.level
    for v in g.nodes():
        below = [u for u in g.neighbors(v) if lev[u] == lev[v] + 1]
        for i, u in enumerate(below):
            for w in below[i + 1:]:
                if h2[u] == h2[w] == h2[par[u]] == h2[par[w]]:
                    if v == par[w]:
                        found.append(Violation("a", u, w, v))
                    elif v == par[u]:
                        found.append(Violation("a", w, u, v))
                    else:
                        found.append(Violation("b", u, w, v))
    return sorted(found)


class _Eliminator:
    """Mutable working state for the level-by-level elimination."""

    def __init__(self, g: Graph, tree: RootedTree, heights: TwoHeightMap):
        self.g = g
        self.parent = list(tree.parent)
        self.level = list(tree.level)
        self.root = tree.root
        self.h2 = list(heights.h2)
        self.kids: list[set[int]] = [set() for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                self.kids[p].add(v)

    def is_fast(self, v: int) -> bool:
        p = self.parent[v]
        return p >= 0 and self.h2[v] == self.h2[p]

    def refresh_up(self, v: int) -> None:
        while v >= 0:
            new = two_height_of([self.h2[c] for c in self.kids[v]])
            if new == self.h2[v]:
                return
            self.h2[v] = new
            v = self.parent[v]

    def reparent(self, u: int, v: int) -> None:
        old = self.parent[u]
        self.kids[old].discard(u)
        self.kids[v].add(u)
        self.parent[u] = v

    def classify(self, u: int, w: int, v: int) -> Violation:
        if v == self.parent[w]:
            return Violation("a", u, w, v)
        if v == self.parent[u]:
            return Violation("a", w, u, v)
        return Violation("b", min(u, w), max(u, w), v)

    def violations_at(self, u: int) -> Iterator[Violation]:
        if not self.is_fast(u):
            return
        lu = self.level[u]
        for v in self.g.neighbors(u):
            if self.level[v] != lu - 1:
                continue
            for w in self.g.neighbors(v):
                if w != u and self.level[w] == lu and self.h2[w] == self.h2[u] and self.is_fast(w):
                    yield self.classify(u, w, v)

    def still_holds(self, viol: Violation) -> bool:
        u, w, v = viol.u, viol.u2, viol.v
        if not (self.is_fast(u) and self.is_fast(w) and self.h2[u] == self.h2[w]):
            return False
        return self.classify(u, w, v) == viol

    def apply(self, viol: Violation) -> set[int]:
        """Perform the fix and return parents whose child sets changed."""
        touched = {self.parent[viol.u], viol.v}
        self.reparent(viol.u, viol.v)
        if viol.kind == "b":
            touched.add(self.parent[viol.u2])
            self.reparent(viol.u2, viol.v)
        for p in sorted(touched, key=lambda x: -self.level[x]):
            self.refresh_up(p)
        return touched

    def tree(self) -> RootedTree:
        return RootedTree(self.root, list(self.parent), list(self.level))

    def heights(self) -> TwoHeightMap:
        return TwoHeightMap(list(self.h2))

    def fast_potential(self, level_nodes: list[int]) -> int:
        # shifted by one per fast node so that fixes on 2-height-0 pairs also count
        return sum(self.h2[u] + 1 for u in level_nodes if self.is_fast(u))


def find_violation(g: Graph, tree: RootedTree, heights: TwoHeightMap, level: int) -> Violation | None:
    """Smallest type-(a) violation at ``level`` in (u, u', v) order, else the smallest type-(b) one.

    For type (a) the common neighbor v is the parent of u'; the fix moves u under v.
    """
    work = _Eliminator(g, tree, heights)
    best = None
    for u in g.nodes():
        if tree.level[u] == level:
            for viol in work.violations_at(u):
                if best is None or viol < best:
                    best = viol
    return best


def fix_violation(g: Graph, tree: RootedTree, heights: TwoHeightMap, viol: Violation) -> tuple[RootedTree, TwoHeightMap]:
    work = _Eliminator(g, tree, heights)
    if not work.still_holds(viol):
        raise ValueError(f"{viol} is not a violation of the given tree")
    work.apply(viol)
    return work.tree(), work.heights()


@dataclass
class BuildStats:
    fixes_per_level: dict[int, int]

    @property
    def total_fixes(self) -> int:
        return sum(self.fixes_per_level.values())


def build_2hrt(g: Graph, root: int, stats: BuildStats | None = None) -> tuple[RootedTree, TwoHeightMap]:
    tree = bfs_tree(g, root)
    work = _Eliminator(g, tree, compute_two_heights(tree))
    by_level = tree.levels()
    ceiling = g.n * ceil_log2(g.n)
    for lev in range(len(by_level) - 1, 0, -1):
        nodes = by_level[lev]
        heap: list[Violation] = []
        queued: set[Violation] = set()

        def push(u: int) -> None:
            for viol in work.violations_at(u):
                if viol not in queued:
                    queued.add(viol)
                    heapq.heappush(heap, viol)

        for u in nodes:
            push(u)
        fixes = 0
        pot = work.fast_potential(nodes)
        while heap:
            viol = heapq.heappop(heap)
            queued.discard(viol)
            if not work.still_holds(viol):
                continue
            touched = work.apply(viol)
            fixes += 1
            new_pot = work.fast_potential(nodes)
            if new_pot >= pot:
                raise PotentialError(f"potential did not drop at level {lev}: {pot} -> {new_pot} after {viol}")
            if fixes > ceiling:
                raise PotentialError(f"level {lev} exceeded {ceiling} fixes")
            pot = new_pot
            for p in touched:
                for c in work.kids[p]:
                    push(c)
        if stats is not None:
            stats.fixes_per_level[lev] = fixes
    return work.tree(), work.heights()


def fast_track_decomposition(tree: RootedTree, heights: TwoHeightMap, v: int) -> tuple[list[list[int]], int]:
    """Split the root-to-v path into maximal fast runs; returns (tracks, number of slow edges)."""
    path = tree.path_from_root(v)
    tracks = [[path[0]]]
    slow = 0
    for prev, cur in zip(path, path[1:]):
        if heights.h2[cur] == heights.h2[prev]:
            tracks[-1].append(cur)
        else:
            slow += 1
            tracks.append([cur])
    return tracks, slow


def dump_tree(tree: RootedTree, heights: TwoHeightMap) -> str:
    lines = []
    for v in range(tree.n):
        if v == tree.root:
            lines.append(f"{v} - 0 {heights.h2[v]} -")
        else:
            lines.append(f"{v} {tree.parent[v]} {tree.level[v]} {heights.h2[v]} {heights.edge_class(tree, v)}")
    return "\n".join(lines) + "\n"
