"""Deterministic selection of a transmitter subset A' ⊆ A that isolates many B-nodes.

For each inclusion probability p = 2^-i we fix the members of A one by one,
keeping whichever choice does not lower the conditional expectation of the
number of B-nodes with exactly one chosen neighbor, and return the best
outcome over all i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..netgraph import ceil_log2


class SelectionError(AssertionError):
    pass


@dataclass
class BipartiteInstance:
    a_nodes: list[int]
    b_nodes: list[int]
    adj_a: dict[int, list[int]] = field(default_factory=dict)  # a -> B-neighbors

    def __post_init__(self) -> None:
        self.a_nodes = sorted(self.a_nodes)
        self.b_nodes = sorted(self.b_nodes)
        bset = set(self.b_nodes)
        self.adj_a = {a: sorted(set(self.adj_a.get(a, ())) & bset) for a in self.a_nodes}
        self.deg_b = {b: 0 for b in self.b_nodes}
        for a in self.a_nodes:
            for b in self.adj_a[a]:
                self.deg_b[b] += 1
        lonely = [b for b, d in self.deg_b.items() if d == 0]
        if lonely:
            raise ValueError(f"B-nodes without a neighbor in A: {lonely[:5]}")


def required_size(inst: BipartiteInstance) -> float:
    # ceil_log2 is floored at 1, matching max(1, ceil(log |A|))
    return len(inst.b_nodes) / (15 * ceil_log2(len(inst.a_nodes)))


def isolated(inst: BipartiteInstance, chosen: set[int]) -> set[int]:
    hits: dict[int, int] = {}
    for a in chosen:
        for b in inst.adj_a[a]:
            hits[b] = hits.get(b, 0) + 1
    return {b for b, c in hits.items() if c == 1}


def _term(chosen: int, open_: int, p: float) -> float:
    """P(exactly one chosen neighbor) given ``chosen`` fixed-in and ``open_`` undecided neighbors."""
    if chosen >= 2:
        return 0.0
    q = 1.0 - p
    if chosen == 1:
        return q ** open_
    return open_ * p * q ** (open_ - 1) if open_ else 0.0


def _greedy_for(inst: BipartiteInstance, p: float) -> set[int]:
    chosen_cnt = {b: 0 for b in inst.b_nodes}
    open_cnt = dict(inst.deg_b)
    chosen: set[int] = set()
    for a in inst.a_nodes:
        gain_in = gain_out = 0.0
        for b in inst.adj_a[a]:
            c, o = chosen_cnt[b], open_cnt[b] - 1
            gain_in += _term(c + 1, o, p)
            gain_out += _term(c, o, p)
        take = bool(inst.adj_a[a]) and gain_in >= gain_out
        for b in inst.adj_a[a]:
            open_cnt[b] -= 1
            if take:
                chosen_cnt[b] += 1
        if take:
            chosen.add(a)
    return chosen


def derandomize_bipartite(inst: BipartiteInstance) -> tuple[set[int], set[int]]:
    if not inst.b_nodes:
        return set(), set()
    best_a: set[int] = set()
    best_b: set[int] = set()
    max_deg = max(inst.deg_b.values())
    for i in range(1, max_deg.bit_length() + 2):
        cand = _greedy_for(inst, 2.0 ** -i)
        iso = isolated(inst, cand)
        if len(iso) > len(best_b):
            best_a, best_b = cand, iso
    if len(best_b) < required_size(inst):
        raise SelectionError(f"isolated {len(best_b)} of {len(inst.b_nodes)} B-nodes, below the guarantee")
    return best_a, best_b
