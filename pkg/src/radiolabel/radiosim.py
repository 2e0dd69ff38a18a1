"""Synchronous radio-network engine.

In every round each node either transmits a payload or listens. A listener
receives a message iff exactly one of its neighbors transmits; otherwise it
hears silence (no collision detection). Transmitters hear nothing.

Programs never see node ids, the graph or n: they are constructed from their
label by the caller and the engine only hands them the round number and the
payloads they hear.
"""

from __future__ import annotations

import dataclasses
import hashlib
import heapq
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator

from .netgraph import Graph

BROADCAST_STEPS = ("broadcast", "feedback", "go", "fast", "rescue")


class NodeProgram:
    """Base class for label-driven node state machines.

    ``wake(t)`` must return the earliest round >= t at which ``act`` could
    return a payload given no further receptions, or None if there is none.
    The engine only calls ``act`` at those rounds; a dense run calls it every
    round and must produce the same trace.
    """

    def wake(self, t: int) -> int | None:
        return t

    def act(self, t: int) -> Any | None:
        return None

    def hear(self, t: int, payload: Any) -> None:
        pass


class ProgramError(RuntimeError):
    def __init__(self, node: int, round_no: int, exc: BaseException):
        super().__init__(f"program of node {node} failed in round {round_no}: {exc!r}")
        self.node = node
        self.round = round_no


@dataclass
class RoundRecord:
    transmitters: dict[int, Any] = field(default_factory=dict)
    received: dict[int, int] = field(default_factory=dict)  # listener -> unique transmitting neighbor
    collided: tuple[int, ...] = ()


@dataclass
class Trace:
    n: int
    horizon: int
    rounds: dict[int, RoundRecord] = field(default_factory=dict)
    end: int = 0  # first round not simulated

    def active_rounds(self) -> list[int]:
        return sorted(self.rounds)

    def record(self, t: int) -> RoundRecord:
        return self.rounds.get(t, _EMPTY)

    def transmissions(self, node: int) -> list[tuple[int, Any]]:
        return [(t, r.transmitters[node]) for t, r in sorted(self.rounds.items()) if node in r.transmitters]

    def receptions(self) -> Iterator[tuple[int, int, Any]]:
        """(round, listener, payload) for every delivered message, in round order."""
        for t in sorted(self.rounds):
            rec = self.rounds[t]
            for v in sorted(rec.received):
                yield t, v, rec.transmitters[rec.received[v]]

    def last_transmission_round(self) -> int:
        return max(self.rounds, default=-1)

    def lines(self, step_name: Callable[[int], str] | None = None) -> list[str]:
        name = step_name or broadcast_step_name
        out = []
        for t in sorted(self.rounds):
            rec = self.rounds[t]
            receptions = [{"node": v, "kind": "message"} for v in sorted(rec.received)]
            receptions += [{"node": v, "kind": "collision"} for v in rec.collided]
            receptions.sort(key=lambda r: r["node"])
            out.append(json.dumps({
                "round": t,
                "step": name(t),
                "transmitters": [{"node": v, "digest": digest(p)} for v, p in sorted(rec.transmitters.items())],
                "receptions": receptions,
            }, sort_keys=True, separators=(",", ":")))
        return out

    def dumps(self, step_name: Callable[[int], str] | None = None) -> str:
        return "".join(line + "\n" for line in self.lines(step_name))


_EMPTY = RoundRecord()


def broadcast_step_name(t: int) -> str:
    return BROADCAST_STEPS[t % 5]


def canonical(obj: Any) -> Any:
    if isinstance(obj, (set, frozenset)):
        return sorted((canonical(x) for x in obj), key=repr)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return [type(obj).__name__] + [canonical(getattr(obj, f.name)) for f in dataclasses.fields(obj)]
    if isinstance(obj, (list, tuple)):
        return [canonical(x) for x in obj]
    if isinstance(obj, dict):
        return sorted(([canonical(k), canonical(v)] for k, v in obj.items()), key=repr)
    return obj


def digest(payload: Any) -> str:
    text = json.dumps(canonical(payload), separators=(",", ":"), default=repr)
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def run(
    g: Graph,
    programs: dict[int, NodeProgram] | list[NodeProgram],
    horizon: int,
    *,
    dense: bool = False,
    start: int = 0,
) -> Trace:
    """Simulate rounds ``start`` .. ``horizon - 1``; stops early once no program will ever act again."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    progs = [programs[v] for v in g.nodes()] if isinstance(programs, dict) else list(programs)
    if len(progs) != g.n:
        raise ValueError(f"need one program per node, got {len(progs)} for n={g.n}")
    trace = Trace(g.n, horizon)
    sched: list[int | None] = [None] * g.n
    heap: list[tuple[int, int]] = []

    def schedule(v: int, t: int) -> None:
        try:
            w = progs[v].wake(t)
        except Exception as exc:  # surfaced with locator
            raise ProgramError(v, t, exc) from exc
        if w is not None and w < t:
            raise ProgramError(v, t, ValueError(f"wake {w} lies in the past"))
        sched[v] = w
        if w is not None:
            heapq.heappush(heap, (w, v))

    if not dense:
        for v in g.nodes():
            schedule(v, start)
    t = start
    while t < horizon:
        if dense:
            due = list(g.nodes())
        else:
            while heap and (sched[heap[0][1]] != heap[0][0]):
                heapq.heappop(heap)
            if not heap:
                break
            if heap[0][0] > t:
                t = heap[0][0]
                if t >= horizon:
                    break
            due = []
            while heap and heap[0][0] == t:
                w, v = heapq.heappop(heap)
                if sched[v] == w:
                    due.append(v)
                    sched[v] = None
        sending: dict[int, Any] = {}
        for v in due:
            try:
                payload = progs[v].act(t)
            except Exception as exc:
                raise ProgramError(v, t, exc) from exc
            if payload is not None:
                sending[v] = payload
        if sending:
            count: dict[int, int] = {}
            last: dict[int, int] = {}
            for v in sending:
                for w in g.neighbors(v):
                    if w not in sending:
                        count[w] = count.get(w, 0) + 1
                        last[w] = v
            received = {w: last[w] for w, c in count.items() if c == 1}
            collided = tuple(sorted(w for w, c in count.items() if c > 1))
            trace.rounds[t] = RoundRecord(sending, received, collided)
            for w in sorted(received):
                try:
                    progs[w].hear(t, sending[received[w]])
                except Exception as exc:
                    raise ProgramError(w, t, exc) from exc
                if not dense:
                    schedule(w, t + 1)
        if not dense:
            for v in due:
                if sched[v] is None:
                    schedule(v, t + 1)
        t += 1
    trace.end = min(t, horizon)
    return trace


@dataclass(frozen=True)
class ReplayResult:
    identical: bool
    round: int | None = None
    node: int | None = None

    def __bool__(self) -> bool:
        return self.identical


def first_divergence(a: Trace, b: Trace, upto: int | None = None) -> ReplayResult:
    """Compare two traces round by round (optionally only rounds < upto)."""
    rounds = sorted(set(a.rounds) | set(b.rounds))
    if upto is not None:
        rounds = [t for t in rounds if t < upto]
    for t in rounds:
        ra, rb = a.record(t), b.record(t)
        nodes = sorted(set(ra.transmitters) | set(rb.transmitters) | set(ra.received) | set(rb.received))
        for v in nodes:
            pa, pb = ra.transmitters.get(v), rb.transmitters.get(v)
            if (v in ra.transmitters) != (v in rb.transmitters) or digest(pa) != digest(pb):
                return ReplayResult(False, t, v)
            if ra.received.get(v) != rb.received.get(v):
                return ReplayResult(False, t, v)
        if ra.collided != rb.collided:
            diff = sorted(set(ra.collided) ^ set(rb.collided))
            return ReplayResult(False, t, diff[0])
    return ReplayResult(True)


def replay(trace: Trace, g: Graph, programs: dict[int, NodeProgram] | list[NodeProgram], horizon: int | None = None) -> ReplayResult:
    """Re-run with fresh programs and compare against ``trace`` on the common prefix."""
    fresh = run(g, programs, horizon if horizon is not None else trace.horizon)
    upto = min(fresh.end, trace.end) if horizon is not None else None
    return first_divergence(trace, fresh, upto)


def informed_times(trace: Trace, source: int, accept: Callable[[int, Any], bool]) -> dict[int, int]:
    """Round of the first accepted reception per node; the source counts as informed at round 0."""
    times = {source: 0}
    for t, v, payload in trace.receptions():
        if v not in times and accept(v, payload):
            times[v] = t
    return times


def check_reception_rule(g: Graph, trace: Trace) -> list[tuple[int, int]]:
    """Independent recount of the reception rule; returns (round, node) mismatches."""
    bad = []
    for t, rec in trace.rounds.items():
        senders = rec.transmitters
        near = set(senders) | set(rec.received) | set(rec.collided)
        for w in senders:
            near.update(g.neighbors(w))
        for v in sorted(near):
            if v in senders:
                if v in rec.received or v in rec.collided:
                    bad.append((t, v))
                continue
            heard = [w for w in g.neighbors(v) if w in senders]
            if len(heard) == 1:
                ok = rec.received.get(v) == heard[0]
            else:
                ok = v not in rec.received and ((len(heard) > 1) == (v in rec.collided))
            if not ok:
                bad.append((t, v))
    return sorted(bad)


def collisions_at(trace: Trace, nodes: Iterable[int]) -> list[tuple[int, int]]:
    wanted = set(nodes)
    return [(t, v) for t in sorted(trace.rounds) for v in trace.rounds[t].collided if v in wanted]
