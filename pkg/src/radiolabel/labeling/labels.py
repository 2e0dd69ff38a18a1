"""Label records, their bit encodings and the label table file format."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

CORE_WIDTH = 7
ACK_WIDTH = 9


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class BroadcastLabel:
    join: int = 0
    lev: int = 0  # level mod 3 (two bits on the wire)
    stay: int = 0
    go: int = 0
    fast: int = 0
    rescue: int = 0
    on_path: int | None = None
    terminal: int | None = None

    def __post_init__(self) -> None:
        for name in ("join", "stay", "go", "fast", "rescue"):
            if getattr(self, name) not in (0, 1):
                raise LabelError(f"{name} must be a bit")
        if not 0 <= self.lev <= 3:
            raise LabelError("lev must fit in two bits")
        if (self.on_path is None) != (self.terminal is None):
            raise LabelError("ack bits come as a pair")
        if self.on_path is not None and (self.on_path not in (0, 1) or self.terminal not in (0, 1)):
            raise LabelError("ack fields must be bits")

    @property
    def has_ack(self) -> bool:
        return self.on_path is not None

    @property
    def instructions(self) -> tuple[int, int, int, int]:
        return self.stay, self.go, self.fast, self.rescue

    def with_ack(self, on_path: int, terminal: int) -> BroadcastLabel:
        return replace(self, on_path=on_path, terminal=terminal)

    def encode(self) -> str:
        bits = [self.join, self.lev >> 1, self.lev & 1, self.stay, self.go, self.fast, self.rescue]
        if self.has_ack:
            bits += [self.on_path, self.terminal]
        return "".join(map(str, bits))

    @classmethod
    def decode(cls, text: str) -> BroadcastLabel:
        if len(text) not in (CORE_WIDTH, ACK_WIDTH) or set(text) - {"0", "1"}:
            raise LabelError(f"broadcast label must be {CORE_WIDTH} or {ACK_WIDTH} bits, got {text!r}")
        b = [int(c) for c in text]
        ack = (b[7], b[8]) if len(b) == ACK_WIDTH else (None, None)
        return cls(b[0], 2 * b[1] + b[2], b[3], b[4], b[5], b[6], *ack)


def _gamma(k: int) -> str:
    """Elias gamma code of k + 1 (so k >= 0 is allowed)."""
    body = bin(k + 1)[2:]
    return "0" * (len(body) - 1) + body


def _read_gamma(text: str, pos: int) -> tuple[int, int]:
    zeros = 0
    while pos + zeros < len(text) and text[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(text):
        raise LabelError("truncated gamma code")
    return int(text[pos + zeros:end], 2) - 1, end


@dataclass(frozen=True)
class GatherLabel:
    broadcast: BroadcastLabel
    delta: int  # color modulus C of the schedule; spacing is delta + 1
    s: int
    s_prime: int
    b: int
    fast: int
    leaf: int
    sink_degree: int | None = None
    diameter_hint: int | None = None
    log_hint: int | None = None

    def __post_init__(self) -> None:
        if not self.broadcast.has_ack:
            raise LabelError("gather labels embed an ack-extended broadcast label")
        if self.delta < 1 or not 0 <= self.s < max(self.delta, 1) or not -1 <= self.s_prime < self.delta:
            raise LabelError(f"color fields out of range: delta={self.delta} s={self.s} s'={self.s_prime}")
        if self.b not in (-1, 0, 1) or self.fast not in (0, 1) or self.leaf not in (0, 1):
            raise LabelError("b must be in {-1,0,1}; flags must be bits")
        if not (self.leaf == 1) == (self.s_prime == -1) == (self.b == -1):
            raise LabelError("leaf flag, s' = -1 and b = -1 must agree")
        sink_fields = (self.sink_degree, self.diameter_hint, self.log_hint)
        if any(f is None for f in sink_fields) and any(f is not None for f in sink_fields):
            raise LabelError("sink fields come together")

    @property
    def is_sink(self) -> bool:
        return self.sink_degree is not None

    @property
    def spacing(self) -> int:
        return self.delta + 1

    def encode(self) -> str:
        w = self.delta.bit_length()
        fields = [
            self.broadcast.encode(),
            "1" * w + "0",
            format(self.delta, f"0{w}b"),
            format(self.s, f"0{w}b"),
            format(self.s_prime + 1, f"0{w}b"),
            format(self.b + 1, "02b"),
            str(self.fast),
            str(self.leaf),
            "1" if self.is_sink else "0",
        ]
        if self.is_sink:
            fields += [_gamma(self.sink_degree), _gamma(self.diameter_hint), _gamma(self.log_hint)]
        return "".join(fields)

    @classmethod
    def decode(cls, text: str) -> GatherLabel:
        if len(text) < ACK_WIDTH + 8 or set(text) - {"0", "1"}:
            raise LabelError("gather label too short or not binary")
        head = BroadcastLabel.decode(text[:ACK_WIDTH])
        pos = ACK_WIDTH
        w = 0
        while pos < len(text) and text[pos] == "1":
            w += 1
            pos += 1
        pos += 1
        need = 3 * w + 2 + 3
        if w == 0 or pos + need > len(text):
            raise LabelError("malformed width prefix")

        def take(k: int) -> int:
            nonlocal pos
            val = int(text[pos:pos + k], 2)
            pos += k
            return val

        delta, s, sp1, b1 = take(w), take(w), take(w), take(2)
        fast, leaf, sink = take(1), take(1), take(1)
        extra: tuple[int | None, ...] = (None, None, None)
        if sink:
            vals = []
            for _ in range(3):
                val, pos = _read_gamma(text, pos)
                vals.append(val)
            extra = tuple(vals)
        if pos != len(text):
            raise LabelError("trailing bits in gather label")
        return cls(head, delta, s, sp1 - 1, b1 - 1, fast, leaf, *extra)

    def row_fields(self) -> list[int]:
        row = [self.delta, self.s, self.s_prime, self.b, self.fast, self.leaf]
        if self.is_sink:
            row += [self.sink_degree, self.diameter_hint, self.log_hint]
        return row


Label = Union[BroadcastLabel, GatherLabel]
LabelTable = dict[int, Label]


def label_width(label: Label) -> int:
    return len(label.encode())


def table_width(table: LabelTable) -> int:
    """Length of the scheme: the longest encoded label."""
    return max(label_width(x) for x in table.values())


def save_table(table: LabelTable) -> str:
    lines = []
    for v in sorted(table):
        lab = table[v]
        extra = "" if isinstance(lab, BroadcastLabel) else " " + " ".join(map(str, lab.row_fields()))
        lines.append(f"{v} {lab.encode()}{extra}")
    return "\n".join(lines) + "\n"


def load_table(text: str) -> LabelTable:
    table: LabelTable = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        try:
            v = int(parts[0])
        except ValueError:
            raise LabelError(f"line {lineno}: bad node id {parts[0]!r}") from None
        if len(parts) < 2:
            raise LabelError(f"line {lineno}: missing bitstring")
        try:
            lab: Label
            if len(parts) == 2:
                lab = BroadcastLabel.decode(parts[1])
            else:
                lab = GatherLabel.decode(parts[1])
                if lab.row_fields() != [int(x) for x in parts[2:]]:
                    raise LabelError("integer columns disagree with the bitstring")
        except LabelError as exc:
            raise LabelError(f"line {lineno}: {exc}") from None
        if v in table:
            raise LabelError(f"line {lineno}: duplicate node {v}")
        table[v] = lab
    return table
