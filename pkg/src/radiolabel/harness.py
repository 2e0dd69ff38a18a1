"""Experiment orchestration, invariant suites, replay verification and sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import radiosim
from .broadcast import STEPS, accepts_message, fast_program, make_programs
from .gathergossip import (
    GatherProgram,
    GossipConfig,
    GossipProgram,
    assign_gather_labels,
    assign_s_coloring,
    broadcast_labels_for,
    check_s_coloring,
    compute_schedule,
    gathering_window,
    gossip_horizon,
    parent_misses,
    phase_rounds,
    prepare_gossip_labels,
    run_gather_centralized,
    simulate_gossip,
)
from .hrt import RootedTree, TwoHeightMap, bfs_tree, build_2hrt, check_star_property, compute_two_heights
from .labeling.labels import ACK_WIDTH, CORE_WIDTH, load_table, save_table
from .labeling.oracle import (
    OracleState,
    assign_ack_bits,
    express_round_bound,
)
from .netgraph import Graph, generate, load_graph, parse_family, save_graph, star_path
from .netgraph import ceil_log2 as clog

PROTOCOLS = ("executor-constructive", "fast", "express", "gather", "gossip")
BROADCAST_PROTOCOLS = PROTOCOLS[:3]
SOURCE_MESSAGE = "m"
GATHER_LABEL_A, GATHER_LABEL_B = 19, 4  # non-sink gather label width <= a + b * ceil(log delta)


# -- configuration and reports ----------------------------------------------------

@dataclass
class ExperimentConfig:
    graph: str
    protocol: str
    source: int = 0
    seed: int = 0
    horizon_factor: int = 8
    express_c: float = 60.0
    retry_budget: int = 50
    dissemination: str = "oracle-injected-D"

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; expected one of {', '.join(PROTOCOLS)}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        return cls(**json.loads(text))

    def key(self) -> tuple:
        return (self.graph, self.protocol, self.source, self.seed)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    locator: str | None = None


@dataclass
class Report:
    protocol: str
    graph: str
    n: int
    ecc: int
    max_degree: int
    rounds: int
    model: float
    label_width: int
    checks: list[Check] = field(default_factory=list)
    slack: dict[str, int] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.rounds / self.model if self.model else float("inf")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, detail: str = "", locator: str | None = None) -> None:
        self.checks.append(Check(name, bool(passed), detail, locator))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = round(self.ratio, 6)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_text(self) -> str:
        lines = [
            f"protocol {self.protocol} on {self.graph}",
            f"n={self.n} ecc={self.ecc} max_degree={self.max_degree} rounds={self.rounds} "
            f"model={self.model:g} ratio={self.ratio:.4f} label_width={self.label_width}",
        ]
        for c in self.checks:
            loc = f" at {c.locator}" if c.locator else ""
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}{': ' + c.detail if c.detail else ''}{loc}")
        if self.slack:
            lines.append("  deadline slack histogram: " + ", ".join(f"{k}:{v}" for k, v in self.slack.items()))
        for k in sorted(self.extra):
            lines.append(f"  {k}: {self.extra[k]}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def load_graph_arg(text: str) -> Graph:
    """A family string (``path:n=64``) or a path to a graph file."""
    p = Path(text)
    if p.exists():
        return load_graph(p.read_bytes())
    return generate(parse_family(text))


def model_value(protocol: str, g: Graph, ecc: int) -> float:
    lg = clog(g.n)
    d = max(ecc, 1)
    if protocol == "executor-constructive":
        return d * lg * lg
    if protocol == "fast":
        return d + min(d, lg) * lg * lg
    if protocol == "express":
        return d + lg * lg
    if protocol == "gather":
        return 3 * d + 6 * (g.max_degree() + 1) * lg
    return d + g.max_degree() * lg + lg * lg


def theoretical_rounds(protocol: str, g: Graph, source: int, heights: TwoHeightMap | None, c: float = 60.0) -> int:
    """Upper bound on broadcast rounds used to size the simulation horizon."""
    ecc, lg = g.eccentricity(source), clog(g.n)
    if protocol == "fast":
        return STEPS * (3 * (ecc + 30 * lg * lg * heights.h2[source]) + 3)
    if protocol == "express":
        return math.ceil(express_round_bound(g, source, c))
    return STEPS * 2 * 45 * lg * lg * (ecc + 1)


# -- artifacts -----------------------------------------------------------------------

@dataclass
class RunArtifacts:
    config: ExperimentConfig
    graph: Graph
    labels: dict
    trace: radiosim.Trace
    programs: list
    tree: RootedTree
    heights: TwoHeightMap
    state: OracleState | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def step_name(self):
        return self.extra.get("step_name", radiosim.broadcast_step_name)

    def trace_text(self) -> str:
        return self.trace.dumps(self.step_name())


def _broadcast_hrt(protocol: str, g: Graph, source: int) -> tuple[RootedTree, TwoHeightMap]:
    if protocol == "executor-constructive":
        tree = bfs_tree(g, source)
        return tree, compute_two_heights(tree)
    return build_2hrt(g, source)


def make_labels(config: ExperimentConfig, g: Graph) -> tuple[dict, RootedTree, TwoHeightMap, OracleState]:
    scheme = {"executor-constructive": "executor", "fast": "fast"}.get(config.protocol, "express")
    if config.protocol in BROADCAST_PROTOCOLS:
        tree, heights = _broadcast_hrt(config.protocol, g, config.source)
        table, state = broadcast_labels_for(g, config.source, scheme, (tree, heights), seed=config.seed,
                                            express_c=config.express_c, retry_budget=config.retry_budget)
        return table, tree, heights, state
    gcfg = GossipConfig(scheme=scheme, mode=config.dissemination, seed=config.seed,
                        express_c=config.express_c, retry_budget=config.retry_budget)
    labels, _, _, tree, heights, state = prepare_gossip_labels(g, config.source, gcfg)
    return labels, tree, heights, state


def simulate(config: ExperimentConfig, g: Graph, labels: dict, tree: RootedTree, heights: TwoHeightMap,
             state: OracleState | None = None, dense: bool = False) -> tuple[radiosim.Trace, list, dict]:
    """Run the node programs built from ``labels`` only; the tree supplies harness-side levels for gathering."""
    src = config.source
    if config.protocol in BROADCAST_PROTOCOLS:
        horizon = config.horizon_factor * theoretical_rounds(config.protocol, g, src, heights, config.express_c)
        progs = make_programs(fast_program, labels, src, SOURCE_MESSAGE)
        return radiosim.run(g, progs, horizon, dense=dense), progs, {}
    if config.protocol == "gather":
        diameter = max(tree.level)
        progs = [GatherProgram(labels[v], v, level=tree.level[v], diameter=diameter, start=0) for v in g.nodes()]
        sl = labels[src]
        horizon = gathering_window(diameter, sl.spacing, sl.log_hint)
        return radiosim.run(g, progs, horizon, dense=dense), progs, {"gather_start": 0}
    bound = theoretical_rounds("express", g, src, heights, config.express_c)
    horizon = gossip_horizon(labels, src, g.n, config.dissemination, bound, config.horizon_factor)
    trace, progs = simulate_gossip(g, labels, src, horizon, config.dissemination, dense=dense)
    sink = progs[src]
    extra: dict[str, Any] = {}
    if sink.gather_start is not None:
        start, final = sink.gather_start, sink.final_origin

        def name(t: int, start=start, final=final) -> str:
            if start <= t < final:
                return "gather"
            return ("dissemination:" if t < start else "") + radiosim.broadcast_step_name(t)

        extra = {"gather_start": start, "final_origin": final, "step_name": name,
                 "phases": phase_rounds(trace, sink)}
    return trace, progs, extra


def run_experiment(config: ExperimentConfig, g: Graph | None = None) -> tuple[RunArtifacts, Report]:
    g = g if g is not None else load_graph_arg(config.graph)
    labels, tree, heights, state = make_labels(config, g)
    trace, progs, extra = simulate(config, g, labels, tree, heights, state)
    art = RunArtifacts(config, g, labels, trace, progs, tree, heights, state, extra)
    return art, invariant_suite(config.protocol, art)


# -- invariant suites ------------------------------------------------------------------

def _first(items: list) -> str | None:
    if not items:
        return None
    x = items[0]
    if isinstance(x, tuple) and len(x) == 2:
        return f"round {x[0]} node {x[1]}"
    return str(x)


def _slack_histogram(values: list[int]) -> dict[str, int]:
    buckets: Counter = Counter()
    for s in values:
        key = "<0" if s < 0 else ("0" if s == 0 else f"{1 << (s.bit_length() - 1)}-{(1 << s.bit_length()) - 1}")
        buckets[key] += 1
    order = lambda k: -1 if k == "<0" else int(k.split("-")[0])  # noqa: E731
    return {k: buckets[k] for k in sorted(buckets, key=order)}


def _delivery_failures(trace: radiosim.Trace, state: OracleState) -> list[tuple[int, int]]:
    """Fast/Rescue: the intended child hears exactly its designated sender in the designated step."""
    bad = []
    for rec in state.blocks:
        for step, pairs in ((3, rec.fast_targets), (4, rec.rescue)):
            t = STEPS * rec.block + step
            got = trace.record(t).received
            for sender, child in pairs.items():
                if got.get(child) != sender:
                    bad.append((t, child))
    return bad


def broadcast_checks(rep: Report, art: RunArtifacts) -> None:
    g, st, trace, progs = art.graph, art.state, art.trace, art.programs
    proto = art.config.protocol
    rep.add("reception rule recount", not (m := radiosim.check_reception_rule(g, trace)), f"{len(m)} mismatches", _first(m))
    times = [p.informed_round for p in progs]
    missing = [v for v, t in enumerate(times) if t is None]
    rep.add("all nodes informed", not missing, f"{len(missing)} uninformed", None if not missing else f"node {missing[0]}")
    diff = [v for v in g.nodes() if times[v] != st.informed_round[v]]
    rep.add("programs reproduce oracle schedule", not diff, f"{len(diff)} nodes differ",
            None if not diff else f"node {diff[0]} round {times[diff[0]]} vs {st.informed_round[diff[0]]}")
    accepted = radiosim.informed_times(trace, art.config.source, accepts_message(art.tree.level))
    rep.add("acceptance only from the level above", all(accepted.get(v) == times[v] for v in g.nodes()))
    rep.add("every accepted message is the source message", all(p.message == SOURCE_MESSAGE for p in progs))
    quiet_from = STEPS * (st.completion_block + 1)
    late = [t for t in trace.rounds if t >= quiet_from]
    rep.add("silence after completion", not late, f"{len(late)} late rounds", None if not late else f"round {min(late)}")
    stalled = [r.block for r in st.blocks if r.dom and not r.informed]
    rep.add("progress in every active block", not stalled, locator=None if not stalled else f"block {stalled[0]}")
    widths = {len(lab.encode()) for lab in art.labels.values()}
    rep.add("broadcast label width", widths == {CORE_WIDTH}, f"widths {sorted(widths)}, expected {CORE_WIDTH}")
    if proto in ("executor-constructive", "fast"):
        left = [s for s in st.stages if s.left_uninformed]
        rep.add("each stage empties its level's frontier", not left, f"{len(st.stages)} stages, {len(left)} incomplete",
                None if not left else f"stage {left[0].stage} level {left[0].level} block {left[0].first_block}")
    bad = _delivery_failures(trace, st)
    rep.add("fast/rescue delivery collision-free", not bad, f"{sum(len(b.fast_targets) + len(b.rescue) for b in st.blocks)} deliveries", _first(bad))
    if proto == "fast":
        misses = st.deadline_misses()
        rep.add("deadline x(v) met by every node", not misses, f"{len(misses)} misses",
                None if not misses else f"node {misses[0][0]} block {misses[0][2]} > {misses[0][1]}")
        lg = clog(g.n)
        cap = 3 * (rep.ecc + 30 * lg * lg * art.heights.h2[art.config.source]) + 2
        rep.add("completion block within fast bound", st.completion_block <= cap, f"block {st.completion_block} <= {cap}")
        rep.slack = _slack_histogram([d - st.informed_block[v] for v, d in st.deadline.items()])
    if proto == "express":
        ev = st.express_edge_violations(art.tree, art.heights)
        rep.add("z(p) < z(v) <= z(p)+7 on every fast edge", not ev, f"{len(ev)} violations",
                None if not ev else f"node {ev[0][0]}")
        misses = st.deadline_misses()
        rep.add("every fast child informed by block z(v)", not misses, f"{len(misses)} misses")
        bound = express_round_bound(g, art.config.source, art.config.express_c)
        rep.add("express rounds within c(D + log^2 n)", st.rounds <= bound,
                f"{st.rounds} <= {bound:.0f} (c={art.config.express_c:g}, attempts={st.attempts})")
        rep.slack = _slack_histogram([d - st.informed_block[v] for v, d in st.deadline.items()])
    rep.extra["completion_round"] = st.completion_round
    rep.extra["fast_bits"] = sum(st.fast)
    rep.extra["rescue_bits"] = sum(st.rescue)


def _subtree_tokens(tree: RootedTree) -> list[frozenset]:
    sub: list[set] = [{v} for v in range(tree.n)]
    for v in sorted(range(tree.n), key=lambda x: -tree.level[x]):
        if tree.parent[v] >= 0:
            sub[tree.parent[v]] |= sub[v]
    return [frozenset(s) for s in sub]


def gather_checks(rep: Report, art: RunArtifacts, gather_progs: list[GatherProgram], start: int) -> None:
    g, tree, heights, trace = art.graph, art.tree, art.heights, art.trace
    sink = tree.root
    coloring = assign_s_coloring(g, tree)
    sc = check_s_coloring(g, tree, coloring)
    rep.add("s-coloring: siblings distinct, no u-p(w) edge", not sc, f"C={coloring.color_count}", _first(sc))
    diameter = max(tree.level)
    schedule = compute_schedule(tree, heights, coloring, diameter)
    bad_div = [v for v in schedule.t if heights.is_fast(tree, v)
               and (schedule.t[v] - (diameter - tree.level[v])) % schedule.spacing]
    rep.add("fast nodes sit on multiples of the spacing", not bad_div, locator=_first(bad_div))
    # only gather payloads sent inside the gathering window
    sends: dict[int, list[tuple[int, Any]]] = {}
    for t in sorted(trace.rounds):
        for v, p in trace.rounds[t].transmitters.items():
            if getattr(p, "kind", None) == "gather":
                sends.setdefault(v, []).append((t, p))
    miss = parent_misses(trace, tree)
    rep.add("no collision at tree parents", not miss, f"{len(miss)} misses", _first(miss))
    subtree = _subtree_tokens(tree)
    incomplete = [(t, v) for v, lst in sends.items() for t, p in lst if not subtree[v] <= p.value.messages]
    rep.add("subtree complete before t(v)", not incomplete, locator=_first(incomplete))
    once = [v for v in g.nodes() if len(sends.get(v, [])) != (0 if v == sink else 1)]
    rep.add("each node transmits exactly once", not once, locator=None if not once else f"node {once[0]}")
    wrong_h2 = [v for v in g.nodes() if v != sink and (
        gather_progs[v].h2 != heights.h2[v]
        or gather_progs[v].h2_round is None
        or gather_progs[v].transmit_round is None
        or gather_progs[v].h2_round >= gather_progs[v].transmit_round)]
    rep.add("learned h2 equals tree h2 before its block", not wrong_h2, f"{len(wrong_h2)} wrong",
            None if not wrong_h2 else f"node {wrong_h2[0]}")
    central = run_gather_centralized(g, tree, schedule, sink, heights, coloring)
    cen_rounds = {v: t for t, r in central.trace.rounds.items() for v in r.transmitters}
    dist_rounds = {v: lst[0][0] - start for v, lst in sends.items()}
    rep.add("centralized and distributed schedules agree", cen_rounds == dist_rounds)
    everyone = frozenset(range(g.n))
    got = frozenset(gather_progs[sink].messages)
    rep.add("sink holds every message", got == everyone, f"{len(got)} of {g.n}")
    last = max((t for lst in sends.values() for t, _ in lst), default=start - 1)
    used = last + 1 - start
    lg, delta = clog(g.n), g.max_degree()
    cap = 3 * diameter + 6 * (delta + 1) * lg + 3
    if coloring.color_count <= delta:
        rep.add("gathering rounds within 3D + 6(delta+1)log n + 3", used <= cap, f"{used} <= {cap}")
    else:
        rep.add("gathering rounds within 3D + 6(delta+1)log n + 3", True, f"not claimed: C={coloring.color_count} > delta={delta}")
    non_sink = [lab for v, lab in art.labels.items() if v != sink]
    wmax = max((len(lab.encode()) for lab in non_sink), default=0)
    wcap = GATHER_LABEL_A + GATHER_LABEL_B * clog(max(delta, 2))
    rep.add("gather label width <= a + b*ceil(log delta)", wmax <= wcap, f"{wmax} <= {wcap} (a={GATHER_LABEL_A}, b={GATHER_LABEL_B})")
    rep.extra["gather_rounds"] = used
    rep.extra["gather_round_cap"] = cap
    rep.extra["schedule_max_block"] = schedule.max_block()
    rep.extra["color_count"] = coloring.color_count
    rep.extra["sink_label_width"] = len(art.labels[sink].encode())


def gossip_checks(rep: Report, art: RunArtifacts) -> None:
    g, tree, progs = art.graph, art.tree, art.programs
    sink = art.config.source
    sp: GossipProgram = progs[sink]
    rep.add("dissemination terminated", sp.tau is not None)
    if sp.tau is None:
        return
    lv = [v for v in g.nodes() if progs[v].level != tree.level[v]]
    rep.add("levels learned from hop counters", not lv, locator=None if not lv else f"node {lv[0]}")
    rep.add("all nodes agree on D and tau", len({(p.diameter, p.tau) for p in progs}) == 1)
    t1, completion = sp.ack.t1, art.state.completion_round
    slack = max(tree.level) + 4
    rep.add("t1 <= completion + D + 4", t1 <= completion + slack, f"t1={t1} completion={completion}")
    widths = {len(lab.broadcast.encode()) for lab in art.labels.values()}
    rep.add("ack broadcast label width", widths == {ACK_WIDTH}, f"widths {sorted(widths)}")
    gather_checks(rep, art, [p.gather for p in progs], sp.gather_start)
    rep.add("sink received deg(sink) tuples", sp.sink_received == g.degree(sink), f"{sp.sink_received} vs {g.degree(sink)}")
    everyone = set(g.nodes())
    short = [v for v in g.nodes() if progs[v].known_messages != everyone]
    rep.add("every node ends with all n messages", not short, f"{len(short)} incomplete",
            None if not short else f"node {short[0]}")
    rep.extra["phases"] = art.extra.get("phases", {})


def invariant_suite(protocol: str, art: RunArtifacts) -> Report:
    g = art.graph
    ecc = g.eccentricity(art.config.source)
    rounds = art.trace.last_transmission_round() + 1
    if protocol in BROADCAST_PROTOCOLS and art.state is not None:
        rounds = max(p.informed_round or 0 for p in art.programs) + 1
    width = max(len(lab.encode()) for lab in art.labels.values())
    rep = Report(protocol, art.config.graph, g.n, ecc, g.max_degree(), rounds, model_value(protocol, g, ecc), width)
    viol = check_star_property(g, art.tree, art.heights) if protocol != "executor-constructive" else []
    if protocol != "executor-constructive":
        rep.add("tree has no same-height sharing violation", not viol, f"{len(viol)} violations", _first([str(v) for v in viol]))
        hmax = art.heights.max()
        rep.add("max h2 <= min(ecc, ceil log n)", hmax <= min(ecc, clog(g.n)), f"{hmax} <= {min(ecc, clog(g.n))}")
    if protocol in BROADCAST_PROTOCOLS:
        broadcast_checks(rep, art)
    elif protocol == "gather":
        gather_checks(rep, art, art.programs, 0)
    else:
        gossip_checks(rep, art)
    return rep


# -- verification --------------------------------------------------------------------------

def _parse_lines(text: str) -> dict[int, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            out[json.loads(line)["round"]] = line
    return out


def trace_divergence(stored: str, fresh: str) -> tuple[int, int | None] | None:
    """First (round, node) where two serialized traces differ, or None."""
    a, b = _parse_lines(stored), _parse_lines(fresh)
    for t in sorted(set(a) | set(b)):
        if a.get(t) != b.get(t):
            ra = json.loads(a[t]) if t in a else {"transmitters": [], "receptions": []}
            rb = json.loads(b[t]) if t in b else {"transmitters": [], "receptions": []}
            for key in ("transmitters", "receptions"):
                xa = {r["node"]: r for r in ra[key]}
                xb = {r["node"]: r for r in rb[key]}
                for v in sorted(set(xa) | set(xb)):
                    if xa.get(v) != xb.get(v):
                        return t, v
            return t, None
    return None


def verify(config: ExperimentConfig, g: Graph, label_text: str, trace_text: str) -> Report:
    """Replay the stored labels, compare with the stored trace, then run the invariant suite on the replay."""
    labels = load_table(label_text)
    tree, heights = _broadcast_hrt(config.protocol, g, config.source)
    fresh_labels, _, _, state = make_labels(config, g)
    trace, progs, extra = simulate(config, g, labels, tree, heights, state)
    art = RunArtifacts(config, g, labels, trace, progs, tree, heights, state, extra)
    rep = invariant_suite(config.protocol, art)
    rep.add("labels match the oracle", save_table(fresh_labels) == save_table(labels))
    div = trace_divergence(trace_text, art.trace_text())
    rep.add("stored trace replays identically", div is None,
            "" if div is None else "divergence", None if div is None else f"round {div[0]} node {div[1]}")
    return rep


def write_run(art: RunArtifacts, rep: Report, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(art.config.to_json())
    (out / "graph.txt").write_bytes(save_graph(art.graph))
    (out / "labels.txt").write_text(save_table(art.labels))
    (out / "trace.jsonl").write_text(art.trace_text())
    (out / "report.json").write_text(rep.to_json())
    (out / "report.txt").write_text(rep.to_text())


def verify_dir(path: Path) -> Report:
    config = ExperimentConfig.from_json((path / "config.json").read_text())
    g = load_graph((path / "graph.txt").read_bytes())
    return verify(config, g, (path / "labels.txt").read_text(), (path / "trace.jsonl").read_text())


# -- sweeps -----------------------------------------------------------------------------------

CSV_COLUMNS = ("family", "n", "D", "Δ", "protocol", "rounds", "bound", "ratio", "pass")
FIT_MODELS = ("D", "D*log^2 n", "D+log^2 n", "D+Δ log n+log^2 n")


def family_at(template: str, n: int) -> str:
    """Instantiate a family template at size n (p defaults to 2 ln n / n for random graphs)."""
    family, _, rest = template.partition(":")
    params = dict(kv.split("=", 1) for kv in filter(None, rest.split(",")))
    if family == "grid":
        side = max(1, math.isqrt(n))
        params.update(rows=str(side), cols=str(side))
    elif family == "star-path":
        params.setdefault("D", "3")
        params["delta"] = str(max(1, n - int(params["D"])))
    else:
        params["n"] = str(n)
        if family == "random-connected":
            params.setdefault("p", f"{min(1.0, 2 * math.log(max(n, 2)) / n):.6f}")
    return family + ":" + ",".join(f"{k}={v}" for k, v in params.items())


def fit_value(model: str, n: int, d: int, delta: int) -> float:
    lg = clog(n)
    d = max(d, 1)
    return {"D": d, "D*log^2 n": d * lg * lg, "D+log^2 n": d + lg * lg,
            "D+Δ log n+log^2 n": d + delta * lg + lg * lg}[model]


@dataclass
class SweepResult:
    rows: list[dict]
    fits: dict[str, float]  # model -> max over rows of rounds / model
    trend: dict[str, bool]  # model -> True when the larger half of sizes does not exceed the smaller half by > 25 %

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r[k] for k in CSV_COLUMNS})
        return buf.getvalue()

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)


TREND_TOLERANCE = 0.25


def no_growth(ratios_by_n: dict[int, float], tol: float = TREND_TOLERANCE) -> bool:
    """Max-ratio trend test: the max over the larger half of sizes stays within (1 + tol) of the smaller half's max."""
    sizes = sorted(ratios_by_n)
    if len(sizes) < 2:
        return True
    half = len(sizes) // 2
    low = max(ratios_by_n[n] for n in sizes[:half])
    high = max(ratios_by_n[n] for n in sizes[half:])
    return high <= (1 + tol) * low


def _sweep_one(args: tuple[str, str, int]) -> dict:
    spec, protocol, seed = args
    cfg = ExperimentConfig(spec, protocol, seed=seed)
    g = load_graph_arg(spec + (f",seed={seed}" if spec.startswith("random-connected") else ""))
    _, rep = run_experiment(cfg, g)
    return {
        "family": spec, "n": g.n, "D": rep.ecc, "Δ": rep.max_degree, "protocol": protocol,
        "rounds": rep.rounds, "bound": rep.model, "ratio": round(rep.ratio, 6), "pass": rep.passed,
        "seed": seed, "failures": [c.name for c in rep.failures()],
    }


def sweep(template: str, sizes: list[int], protocol: str, seeds: list[int] | None = None, workers: int = 1) -> SweepResult:
    jobs = [(family_at(template, n), protocol, s) for n in sizes for s in (seeds or [0])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    rows.sort(key=lambda r: (r["n"], r["seed"], r["family"]))
    fits, trend = {}, {}
    for model in FIT_MODELS:
        per_n: dict[int, float] = {}
        for r in rows:
            ratio = r["rounds"] / fit_value(model, r["n"], r["D"], r["Δ"])
            per_n[r["n"]] = max(per_n.get(r["n"], 0.0), ratio)
        fits[model] = round(max(per_n.values()), 6) if per_n else 0.0
        trend[model] = no_growth(per_n)
    return SweepResult(rows, fits, trend)


# -- lower-bound demonstration ------------------------------------------------------------------

def lower_bound_demo(depth: int, delta: int) -> dict[str, Any]:
    """Gathering labels on the star-path graph with sink v_1; the hub's leaves are siblings."""
    g = star_path(depth, delta)
    sink, hub = 0, depth - 1
    tree, heights = build_2hrt(g, sink)
    table, state = broadcast_labels_for(g, sink, "executor", (tree, heights))
    table = assign_ack_bits(table, state.informed_round, tree)
    coloring = assign_s_coloring(g, tree)
    labels = assign_gather_labels(g, tree, heights, coloring, table)
    leaves = [v for v in g.nodes() if tree.parent[v] == hub and g.degree(v) == 1]
    distinct = len({coloring.s[v] for v in leaves})
    need = clog(delta) if delta > 1 else 0
    width = max(len(labels[v].encode()) for v in g.nodes() if v != sink)
    s_bits = coloring.color_count.bit_length()
    return {
        "D": depth, "delta": delta, "n": g.n, "leaves": len(leaves), "distinct_s": distinct,
        "ceil_log_delta": need, "s_field_bits": s_bits, "max_label_width": width,
        "passed": distinct >= delta and s_bits >= need and width >= need,
    }


def report_text(path: Path) -> str:
    """Human-readable view of a run directory or a sweep CSV."""
    if path.is_dir():
        return (path / "report.txt").read_text()
    rows = list(csv.DictReader(path.read_text().splitlines()))
    lines = [" ".join(f"{c}={r[c]}" for c in CSV_COLUMNS) for r in rows]
    ratios = [float(r["ratio"]) for r in rows]
    if ratios:
        lines.append(f"max ratio {max(ratios):.4f} over {len(rows)} runs; all pass: {all(r['pass'] == 'True' for r in rows)}")
    return "\n".join(lines) + "\n"
