"""Undirected simple connected graphs, test-family generators and a plain-text graph format."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

FAMILIES = ("path", "star", "complete-binary-tree", "random-connected", "grid", "star-path")
MAX_CONNECT_RETRIES = 100


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    node_count: int
    adjacency: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], *, require_connected: bool = True) -> Graph:
        if n < 1:
            raise GraphError("graph needs at least one node")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if v in nbrs[u]:
                raise GraphError(f"parallel edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        g = cls(n, tuple(tuple(sorted(s)) for s in nbrs))
        if require_connected and not g.is_connected():
            raise GraphError("graph is disconnected")
        return g

    @property
    def n(self) -> int:
        return self.node_count

    def nodes(self) -> range:
        return range(self.node_count)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def max_degree(self) -> int:
        return max(len(a) for a in self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self.nodes() for v in self.adjacency[u] if u < v]

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adjacency[u]
        # adjacency lists are sorted
        lo, hi = 0, len(a)
        while lo < hi:
            mid = (lo + hi) // 2
            if a[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(a) and a[lo] == v

    def distances(self, root: int) -> list[int]:
        dist = [-1] * self.node_count
        dist[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        return min(self.distances(0)) >= 0

    def eccentricity(self, root: int) -> int:
        return max(self.distances(root))

    @cached_property
    def _diameter(self) -> int:
        # all sources at once: bit s of reach[v] is set once v is within distance k of s
        n = self.node_count
        full = (1 << n) - 1
        reach = [1 << v for v in range(n)]
        k = 0
        while any(r != full for r in reach):
            nxt = []
            for v, a in enumerate(self.adjacency):
                r = reach[v]
                for w in a:
                    r |= reach[w]
                nxt.append(r)
            if nxt == reach:
                raise GraphError("graph is disconnected")
            reach = nxt
            k += 1
        return k

    def diameter(self) -> int:
        return self._diameter

    def validate(self) -> None:
        for u, a in enumerate(self.adjacency):
            if list(a) != sorted(set(a)):
                raise GraphError(f"adjacency of {u} not sorted or has duplicates")
            for w in a:
                if w == u:
                    raise GraphError(f"self-loop at {u}")
                if u not in self.adjacency[w]:
                    raise GraphError(f"asymmetric edge ({u}, {w})")
        if not self.is_connected():
            raise GraphError("graph is disconnected")


@dataclass(frozen=True)
class GraphFamilySpec:
    family: str
    params: dict[str, float] = field(default_factory=dict)
    seed: int = 0

    def to_string(self) -> str:
        parts = [f"{k}={_fmt(v)}" for k, v in sorted(self.params.items())]
        if self.family == "random-connected":
            parts.append(f"seed={self.seed}")
        return f"{self.family}:{','.join(parts)}" if parts else self.family


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_family(text: str, seed: int | None = None) -> GraphFamilySpec:
    """Parse strings such as ``star-path:D=3,delta=4`` or ``random-connected:n=50,p=0.1,seed=7``."""
    family, _, rest = text.strip().partition(":")
    if family not in FAMILIES:
        raise GraphError(f"unknown graph family {family!r}; expected one of {', '.join(FAMILIES)}")
    params: dict[str, float] = {}
    spec_seed = 0 if seed is None else seed
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise GraphError(f"malformed parameter {item!r}")
        key = key.strip()
        if key == "seed":
            spec_seed = int(value)
        else:
            params[key] = float(value)
    spec = GraphFamilySpec(family, params, spec_seed)
    _check_params(spec)
    return spec


_REQUIRED = {
    "path": ("n",),
    "star": ("n",),
    "complete-binary-tree": ("n",),
    "random-connected": ("n", "p"),
    "grid": ("rows", "cols"),
    "star-path": ("D", "delta"),
}


def _check_params(spec: GraphFamilySpec) -> None:
    missing = [k for k in _REQUIRED[spec.family] if k not in spec.params]
    if missing:
        raise GraphError(f"{spec.family} needs parameters {', '.join(missing)}")
    for k, v in spec.params.items():
        if k != "p" and (v < 1 or not float(v).is_integer()):
            raise GraphError(f"parameter {k} must be a positive integer, got {v}")
    if spec.family == "random-connected" and not 0.0 <= spec.params["p"] <= 1.0:
        raise GraphError("edge probability p must lie in [0, 1]")
    if spec.family == "star" and spec.params["n"] < 2:
        raise GraphError("star needs n >= 2 (center plus at least one leaf)")


def generate(spec: GraphFamilySpec) -> Graph:
    _check_params(spec)
    p = {k: v for k, v in spec.params.items()}
    fam = spec.family
    if fam == "path":
        n = int(p["n"])
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if fam == "star":
        # node 0 is the center; n counts every node
        n = int(p["n"])
        return Graph.from_edges(n, [(0, i) for i in range(1, n)])
    if fam == "complete-binary-tree":
        n = int(p["n"])
        return Graph.from_edges(n, [((i - 1) // 2, i) for i in range(1, n)])
    if fam == "grid":
        rows, cols = int(p["rows"]), int(p["cols"])
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return Graph.from_edges(rows * cols, edges)
    if fam == "star-path":
        return star_path(int(p["D"]), int(p["delta"]))
    return _random_connected(int(p["n"]), float(p["p"]), spec.seed)


def star_path(depth: int, delta: int) -> Graph:
    """Path v_1..v_depth with ``delta`` pendant leaves on v_depth (0-indexed as 0..depth+delta-1)."""
    edges = [(i, i + 1) for i in range(depth - 1)]
    hub = depth - 1
    edges += [(hub, j) for j in range(depth, depth + delta)]
    return Graph.from_edges(depth + delta, edges)


def _random_connected(n: int, p: float, seed: int) -> Graph:
    for attempt in range(MAX_CONNECT_RETRIES):
        rng = random.Random(seed + attempt)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
        g = Graph.from_edges(n, edges, require_connected=False)
        if g.is_connected():
            return g
    raise GraphError(f"random-connected(n={n}, p={p}) stayed disconnected after {MAX_CONNECT_RETRIES} seeds")


def save_graph(g: Graph) -> bytes:
    lines = [f"{g.node_count} {g.edge_count()}"]
    lines += [f"{u} {v}" for u, v in g.edges()]
    return ("\n".join(lines) + "\n").encode()


def load_graph(data: bytes | str) -> Graph:
    text = data.decode() if isinstance(data, bytes) else data
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise GraphError("line 1: missing 'n m' header")
    lineno, header = rows[0]
    try:
        n, m = (int(x) for x in header.split())
    except ValueError:
        raise GraphError(f"line {lineno}: expected 'n m' header, got {header!r}") from None
    if len(rows) - 1 != m:
        raise GraphError(f"line {lineno}: header declares {m} edges but {len(rows) - 1} follow")
    if n < 1:
        raise GraphError(f"line {lineno}: node count must be positive")
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, ln in rows[1:]:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError:
            raise GraphError(f"line {lineno}: expected 'u v', got {ln!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"line {lineno}: edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise GraphError(f"line {lineno}: self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"line {lineno}: parallel edge ({u}, {v})")
        seen.add(key)
        edges.append((u, v))
    return Graph.from_edges(n, edges)


def graph_stats(g: Graph, root: int) -> tuple[int, int, int, int]:
    """Return (n, max degree, eccentricity of root, diameter)."""
    if not 0 <= root < g.node_count:
        raise GraphError(f"root {root} not in graph")
    return g.node_count, g.max_degree(), g.eccentricity(root), g.diameter()


def ceil_log2(n: int) -> int:
    """Ceiling of log2(n), floored at 1 so it can serve as a divisor and modulus."""
    return max(1, (n - 1).bit_length())
