"""Label-driven node programs for broadcasting on the five-step block grid.

A block occupies five rounds (broadcast, feedback, go, fast, rescue). A node
learns everything it needs from its label and from what it hears: its level
modulo 3, whether to join the dominating set, and the bits its feedback node
hands back. The same state machine serves the levelled executor, the fast
and the express schemes; only the oracle that writes the bits differs.

The acknowledged variant adds a Stop relay along the marked tree path and a
second broadcast of the round t1 at which the source heard Stop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .labeling.labels import BroadcastLabel
from .radiosim import NodeProgram

STEPS = 5
PHASE_MAIN, PHASE_T1, PHASE_GOSSIP = 0, 1, 2


@dataclass(frozen=True)
class Payload:
    kind: str  # broadcast | feedback | stop | t1 | gather
    lev: int  # sender level mod 3
    msg_id: int = 0
    phase: int = PHASE_MAIN
    bits: tuple[int, int, int, int] | None = None
    value: Any = None
    hops: int | None = None  # sender level + 1, so receivers learn their level


MESSAGE_KINDS = ("broadcast", "t1")


def align_up(t: int, modulus: int = 3 * STEPS) -> int:
    """Smallest multiple of ``modulus`` strictly greater than ``t``."""
    return (t // modulus + 1) * modulus


class ExecutorCore:
    """One broadcast run anchored at round ``origin`` (a multiple of 15).

    ``origin`` may be unknown until the message arrives; ``origin_from`` then
    derives it from the accepted payload.
    """

    def __init__(
        self,
        label: BroadcastLabel,
        *,
        kind: str = "broadcast",
        phase: int = PHASE_MAIN,
        origin: int | None = 0,
        origin_from: Callable[[Payload], int] | None = None,
    ):
        self.label = label
        self.kind = kind
        self.phase = phase
        self.origin = origin
        self.origin_from = origin_from
        self.informed = False
        self.informed_round: int | None = None
        self.message: Payload | None = None
        self.level: int | None = None  # learned from hop counters when carried
        self.dom_block: int | None = None
        self.duty_block: int | None = None
        self.orders_block: int | None = None
        self.orders: tuple[int, int, int, int] = (0, 0, 0, 0)
        self.sent_block: int | None = None  # last block in which we acted as a dominator

    # -- source side ------------------------------------------------------
    def start_as_source(self, value: Any, msg_id: int = 0, origin: int | None = None) -> None:
        if origin is not None:
            self.origin = origin
        self.informed = True
        self.informed_round = self.origin
        self.level = 0
        self.message = Payload(self.kind, self.label.lev, msg_id, self.phase, value=value, hops=1)
        if self.label.join:
            self.dom_block = 0

    # -- schedule -----------------------------------------------------------
    def _due_rounds(self) -> list[int]:
        if self.origin is None:
            return []
        base = self.origin
        out = []
        if self.dom_block is not None:
            out.append(base + STEPS * self.dom_block)
        if self.duty_block is not None:
            out.append(base + STEPS * self.duty_block + 1)
        if self.orders_block is not None:
            for step, bit in zip((2, 3, 4), self.orders[1:]):
                if bit:
                    out.append(base + STEPS * self.orders_block + step)
        return out

    def wake(self, t: int) -> int | None:
        later = [r for r in self._due_rounds() if r >= t]
        return min(later) if later else None

    def _outgoing(self) -> Payload:
        assert self.message is not None
        return Payload(self.kind, self.label.lev, self.message.msg_id, self.phase,
                       value=self.message.value, hops=None if self.level is None else self.level + 1)

    def act(self, t: int) -> Payload | None:
        if self.origin is None or t < self.origin or not self.informed:
            return None
        block, step = divmod(t - self.origin, STEPS)
        if step == 0 and self.dom_block == block:
            self.dom_block = None  # silence in the feedback step means leave
            self.sent_block = block
            return self._outgoing()
        if step == 1 and self.duty_block == block:
            self.duty_block = None
            return Payload("feedback", self.label.lev, phase=self.phase, bits=self.label.instructions)
        if step >= 2 and self.orders_block == block and self.orders[step - 1]:
            return self._outgoing()
        return None

    def hear(self, t: int, payload: Payload) -> bool:
        """Process a reception; returns True iff it is this node's first acceptance."""
        if payload.phase != self.phase:
            return False
        own = self.label.lev
        if payload.kind == self.kind:
            if self.informed or payload.lev != (own - 1) % 3:
                return False  # levelled rule: only the level right above counts
            if self.origin is None:
                assert self.origin_from is not None
                self.origin = self.origin_from(payload)
            block, step = divmod(t - self.origin, STEPS)
            self.informed = True
            self.informed_round = t
            self.message = payload
            if payload.hops is not None:
                self.level = payload.hops
            if step == 0 and any(self.label.instructions):
                self.duty_block = block
            if self.label.join:
                self.dom_block = block + 1
            return True
        if payload.kind == "feedback" and self.origin is not None and payload.lev == (own + 1) % 3:
            block, step = divmod(t - self.origin, STEPS)
            if step == 1 and self.sent_block == block:
                stay, *_ = payload.bits
                self.orders_block, self.orders = block, payload.bits
                if stay:
                    self.dom_block = block + 3
        return False


class ExecutorProgram(NodeProgram):
    """Plain broadcast of one message; used for the levelled, fast and express schemes."""

    def __init__(self, label: BroadcastLabel, *, is_source: bool = False, message: Any = None, msg_id: int = 0):
        self.core = ExecutorCore(label)
        if is_source:
            self.core.start_as_source(message, msg_id)

    @property
    def informed_round(self) -> int | None:
        return self.core.informed_round

    @property
    def message(self) -> Any:
        return None if self.core.message is None else self.core.message.value

    def wake(self, t: int) -> int | None:
        return self.core.wake(t)

    def act(self, t: int) -> Payload | None:
        return self.core.act(t)

    def hear(self, t: int, payload: Payload) -> None:
        self.core.hear(t, payload)


def levelled_executor_program(label: BroadcastLabel, *, is_source: bool = False, message: Any = "m") -> ExecutorProgram:
    return ExecutorProgram(label, is_source=is_source, message=message)


def fast_program(label: BroadcastLabel, *, is_source: bool = False, message: Any = "m") -> ExecutorProgram:
    return ExecutorProgram(label, is_source=is_source, message=message)


def express_program(label: BroadcastLabel, *, is_source: bool = False, message: Any = "m") -> ExecutorProgram:
    return ExecutorProgram(label, is_source=is_source, message=message)


def t1_origin(payload: Payload) -> int:
    return align_up(payload.value)


class AcknowledgedProgram(NodeProgram):
    """Broadcast, then Stop back along the marked path, then broadcast t1.

    Every node ends with ``termination`` = R0 + t1, where R0 is the first
    multiple of 15 after t1 (the second broadcast is the first one shifted by R0).
    """

    def __init__(self, label: BroadcastLabel, *, is_source: bool = False, message: Any = "m", msg_id: int = 0):
        if not label.has_ack:
            raise ValueError("acknowledged broadcast needs ack-extended labels")
        self.label = label
        self.is_source = is_source
        self.main = ExecutorCore(label, phase=PHASE_MAIN)
        self.second = ExecutorCore(label, kind="t1", phase=PHASE_T1, origin=None, origin_from=t1_origin)
        self.stop_round: int | None = None
        self.stop_heard = False
        self.t1: int | None = None
        if is_source:
            self.main.start_as_source(message, msg_id)
            if label.terminal:
                self._source_learns_t1(0)

    @property
    def informed_round(self) -> int | None:
        return self.main.informed_round

    @property
    def message(self) -> Any:
        return None if self.main.message is None else self.main.message.value

    @property
    def level(self) -> int | None:
        return self.main.level

    @property
    def termination(self) -> int | None:
        if not self.second.informed:
            return None
        t1 = self.second.message.value
        return align_up(t1) + t1

    def _source_learns_t1(self, t: int) -> None:
        self.t1 = t
        self.second.start_as_source(t, origin=align_up(t))

    def wake(self, t: int) -> int | None:
        cands = [w for w in (self.main.wake(t), self.second.wake(t)) if w is not None]
        if self.stop_round is not None and self.stop_round >= t:
            cands.append(self.stop_round)
        return min(cands) if cands else None

    def act(self, t: int) -> Payload | None:
        if self.stop_round == t:
            self.stop_round = None
            return Payload("stop", self.label.lev)
        out = self.main.act(t)
        return out if out is not None else self.second.act(t)

    def hear(self, t: int, payload: Payload) -> None:
        if payload.kind == "stop":
            if not self.label.on_path or self.stop_heard or payload.lev != (self.label.lev + 1) % 3:
                return
            self.stop_heard = True
            if self.is_source:
                self._source_learns_t1(t)
            else:
                self.stop_round = t + 1
            return
        if payload.phase == PHASE_MAIN:
            if self.main.hear(t, payload) and self.label.terminal:
                block = (t - self.main.origin) // STEPS
                self.stop_round = STEPS * (block + 1)
        else:
            self.second.hear(t, payload)


def acknowledged_program(label: BroadcastLabel, *, is_source: bool = False, message: Any = "m") -> AcknowledgedProgram:
    return AcknowledgedProgram(label, is_source=is_source, message=message)


def make_programs(factory: Callable[..., NodeProgram], table: dict[int, BroadcastLabel], source: int, message: Any = "m") -> list[NodeProgram]:
    return [factory(table[v], is_source=(v == source), message=message) for v in sorted(table)]


def accepts_message(levels: list[int], phase: int = PHASE_MAIN) -> Callable[[int, Any], bool]:
    """Acceptance predicate for :func:`radiosim.informed_times` under the levelled rule."""

    def accept(v: int, payload: Any) -> bool:
        return (
            isinstance(payload, Payload)
            and payload.kind in MESSAGE_KINDS
            and payload.phase == phase
            and payload.lev == (levels[v] - 1) % 3
        )

    return accept
