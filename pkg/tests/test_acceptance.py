"""Acceptance checks, one test and one printed PASS/FAIL line per criterion.

Pinned tolerances:
  * sweep sizes 64..4096 (powers of two), trend tolerance 25 % on the max ratio
  * express constant c = 60, retry budget 50, success share >= 95 % of 20 seeds
  * gather label width <= 19 + 4 * ceil(log delta); gather round slack +3
"""

import math
import random
import time
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES
from radiolabel import harness
from radiolabel.broadcast import acknowledged_program, make_programs
from radiolabel.hrt import build_2hrt, check_star_property
from radiolabel.labeling import (
    ACK_WIDTH,
    CORE_WIDTH,
    BipartiteInstance,
    BudgetExhausted,
    assign_ack_bits,
    assign_express_labels,
    assign_fast_labels,
    derandomize_bipartite,
)
from radiolabel.netgraph import ceil_log2, generate, parse_family
from radiolabel.radiosim import run

SIZES = [64, 128, 256, 512, 1024, 2048, 4096]
SWEEP_FAMILIES = ["complete-binary-tree", "random-connected"]
EXPRESS_C = 60.0
EXPRESS_BUDGET = 50
EXPRESS_SEEDS = 20
EXPRESS_SHARE = 0.95
TREND_TOLERANCE = harness.TREND_TOLERANCE
assert TREND_TOLERANCE == 0.25


def report(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def corpus() -> list[str]:
    """200+ family strings; random graphs reach n = 2048."""
    out = [f"path:n={n}" for n in range(2, 82, 2)]
    out += [f"star:n={n}" for n in range(2, 82, 2)]
    out += [f"complete-binary-tree:n={n}" for n in range(3, 1500, 37)]
    out += [f"grid:rows={r},cols={c}" for r in range(2, 10) for c in (r, r + 3, 2 * r, 3 * r, 4 * r)]
    rng = random.Random(2024)
    for i in range(45):
        n = rng.choice([8, 16, 50, 100, 200, 400, 800, 1200, 2048])
        p = rng.choice([2.0, 3.0, 6.0]) * max(1.0, math.log(n)) / n
        out.append(f"random-connected:n={n},p={min(p, 1.0):.5f},seed={i}")
    out += [f"star-path:D={d},delta={k}" for d in (2, 3, 5) for k in (1, 4, 16)]
    return out


CORPUS = corpus()
GRAPHS = {spec: generate(parse_family(spec)) for spec in CORPUS}

# smaller matrix for full-protocol runs
MATRIX = ["path:n=4", "path:n=64", "star:n=33", "complete-binary-tree:n=127", "grid:rows=9,cols=11",
          "star-path:D=3,delta=8", "random-connected:n=300,p=0.03,seed=5", "random-connected:n=1000,p=0.012,seed=6"]


def _sweeps(protocol: str):
    return {fam: harness.sweep(fam, SIZES, protocol) for fam in SWEEP_FAMILIES}


def test_criterion_01_2hrt_existence():
    t0 = time.time()
    bad = []
    for spec, g in GRAPHS.items():
        tree, heights = build_2hrt(g, 0)
        if not tree.is_bfs_tree_of(g) or check_star_property(g, tree, heights):
            bad.append(spec)
    elapsed = time.time() - t0
    biggest = max(g.n for g in GRAPHS.values())
    ok = len(GRAPHS) >= 200 and biggest <= 2048 and not bad and elapsed < 180
    report(1, ok, f"{len(GRAPHS)} graphs (max n={biggest}), {len(bad)} with violations, {elapsed:.1f}s")
    assert ok, bad[:5]


def test_criterion_02_two_height_bound():
    bad = []
    worst = 0
    for spec, g in GRAPHS.items():
        _, heights = build_2hrt(g, 0)
        cap = min(g.eccentricity(0), ceil_log2(g.n))
        worst = max(worst, heights.max())
        if heights.max() > cap:
            bad.append(spec)
    report(2, not bad, f"max h2 <= min(ecc, ceil log n) on {len(GRAPHS)} graphs; largest h2 seen {worst}")
    assert not bad, bad[:5]


def test_criterion_03_derandomizer():
    rng = random.Random(7)
    failures = 0
    for _ in range(1000):
        na = rng.randint(1, 256)
        nb = rng.randint(1, 400)
        max_deg = rng.choice([1, 2, 4, 16, na])
        adj = {a: [] for a in range(na)}
        for b in range(nb):
            for a in rng.sample(range(na), rng.randint(1, min(max_deg, na))):
                adj[a].append(1000 + b)
        inst = BipartiteInstance(list(range(na)), [1000 + b for b in range(nb)], adj)
        a_sel, b_sel = derandomize_bipartite(inst)
        exact = {b for b in inst.b_nodes if sum(b in adj[a] for a in a_sel) == 1}
        if b_sel != exact or len(b_sel) < nb / (15 * ceil_log2(na)):
            failures += 1
    report(3, failures == 0, f"1000 instances (|A| <= 256), {failures} failures")
    assert failures == 0


def _fit_line(res_by_family, model_name: str) -> tuple[bool, str]:
    parts, ok = [], True
    for fam, res in res_by_family.items():
        per_n = {r["n"]: r["ratio"] for r in res.rows}
        grows = not harness.no_growth(per_n)
        ok &= res.passed and not grows
        parts.append(f"{fam}: max rounds/({model_name}) = {max(per_n.values()):.4f}{' GROWING' if grows else ''}"
                     f"{'' if res.passed else ' invariant failure'}")
    return ok, "; ".join(parts)


def test_criterion_04_constructive_time():
    ok, detail = _fit_line(_sweeps("executor-constructive"), "D*ceil(log n)^2")
    report(4, ok, f"n in {SIZES[0]}..{SIZES[-1]}: {detail}")
    assert ok


def test_criterion_05_fast_deadlines():
    misses, over = [], []
    for spec, g in GRAPHS.items():
        tree, heights = build_2hrt(g, 0)
        _, st = assign_fast_labels(g, 0, (tree, heights))
        lg = ceil_log2(g.n)
        cap = 3 * (g.eccentricity(0) + 30 * lg * lg * heights.h2[0]) + 2
        if st.deadline_misses():
            misses.append(spec)
        if st.completion_block > cap:
            over.append(spec)
    fit_ok, detail = _fit_line(_sweeps("fast"), "D+min(D,log n)log^2 n")
    ok = not misses and not over and fit_ok
    report(5, ok, f"{len(GRAPHS)} graphs: {len(misses)} with deadline misses, {len(over)} over the block bound; {detail}")
    assert ok, (misses[:3], over[:3])


def test_criterion_06_express():
    graphs = ["path:n=128", "complete-binary-tree:n=255", "grid:rows=16,cols=16", "star-path:D=3,delta=32",
              "random-connected:n=256,p=0.04,seed=1", "random-connected:n=1024,p=0.014,seed=2"]
    worst_share, edge_bad, worst_c = 1.0, 0, 0.0
    for spec in graphs:
        g = generate(parse_family(spec))
        tree, heights = build_2hrt(g, 0)
        wins = 0
        for seed in range(EXPRESS_SEEDS):
            try:
                _, st = assign_express_labels(g, 0, seed=1000 * seed, retry_budget=EXPRESS_BUDGET, c=EXPRESS_C,
                                              hrt=(tree, heights))
            except BudgetExhausted:
                continue
            wins += 1
            edge_bad += len(st.express_edge_violations(tree, heights))
            lg = ceil_log2(g.n)
            worst_c = max(worst_c, st.rounds / (g.eccentricity(0) + lg * lg))
        worst_share = min(worst_share, wins / EXPRESS_SEEDS)
    ok = edge_bad == 0 and worst_share >= EXPRESS_SHARE
    report(6, ok, f"{len(graphs)} graphs x {EXPRESS_SEEDS} seeds: z-edge violations {edge_bad}, "
                  f"worst success share {worst_share:.2f} (need {EXPRESS_SHARE}), max rounds/(D+log^2 n) {worst_c:.3f} <= {EXPRESS_C:g}")
    assert ok


def test_criterion_07_label_widths():
    core, ack, gather_bad, worst = set(), set(), [], (0, 0)
    for spec in MATRIX:
        g = generate(parse_family(spec))
        for proto in harness.BROADCAST_PROTOCOLS:
            labels, *_ = harness.make_labels(harness.ExperimentConfig(spec, proto), g)
            core |= {len(lab.encode()) for lab in labels.values()}
        labels, *_ = harness.make_labels(harness.ExperimentConfig(spec, "gossip"), g)
        ack |= {len(lab.broadcast.encode()) for lab in labels.values()}
        cap = harness.GATHER_LABEL_A + harness.GATHER_LABEL_B * ceil_log2(max(g.max_degree(), 2))
        w = max((len(lab.encode()) for v, lab in labels.items() if v != 0), default=0)
        worst = max(worst, (w, cap))
        if w > cap:
            gather_bad.append(spec)
    ok = core == {CORE_WIDTH} and ack == {ACK_WIDTH} and not gather_bad
    report(7, ok, f"broadcast widths {sorted(core)}, ack widths {sorted(ack)}, gather non-sink width <= "
                  f"{harness.GATHER_LABEL_A}+{harness.GATHER_LABEL_B}ceil(log delta) (widest {worst[0]} vs cap {worst[1]})")
    assert ok, gather_bad


GATHER_CHECKS = ("no collision at tree parents", "subtree complete before t(v)",
                 "gathering rounds within 3D + 6(delta+1)log n + 3", "s-coloring: siblings distinct, no u-p(w) edge")


def _gather_reports():
    specs = [s for s in CORPUS if GRAPHS[s].n <= 1200][::3] + MATRIX
    return [(s, harness.run_experiment(harness.ExperimentConfig(s, "gather"), GRAPHS.get(s))[1]) for s in specs]


@pytest.fixture(scope="module")
def gather_reports():
    return _gather_reports()


def test_criterion_08_gathering(gather_reports):
    bad, worst, claimed = [], 0.0, 0
    for spec, rep in gather_reports:
        checks = {c.name: c for c in rep.checks}
        if not all(checks[name].passed for name in GATHER_CHECKS) or not checks["sink holds every message"].passed:
            bad.append(spec)
        if rep.extra["color_count"] <= rep.max_degree:
            claimed += 1
            worst = max(worst, rep.extra["gather_rounds"] / rep.extra["gather_round_cap"])
    ok = not bad
    report(8, ok, f"{len(gather_reports)} graphs: {len(bad)} failing; bound applied on {claimed} (C <= delta), "
                  f"max used/cap {worst:.3f}")
    assert ok, bad[:5]


def test_criterion_09_h2_learning(gather_reports):
    bad = [s for s, rep in gather_reports
           if not next(c for c in rep.checks if c.name == "learned h2 equals tree h2 before its block").passed]
    report(9, not bad, f"{len(gather_reports)} graphs: learned h2 wrong or late on {len(bad)}")
    assert not bad


def test_criterion_10_gossip():
    sweeps = _sweeps("gossip")
    fit_ok, detail = _fit_line(sweeps, "D+delta log n+log^2 n")
    incomplete = [r["family"] for res in sweeps.values() for r in res.rows
                  if "every node ends with all n messages" in r["failures"]]
    ok = fit_ok and not incomplete
    report(10, ok, f"express labels, n in {SIZES[0]}..{SIZES[-1]}: {detail}")
    assert ok


def test_criterion_11_replay_determinism(tmp_path: Path):
    bad = []
    for i, spec in enumerate(MATRIX):
        for proto in harness.PROTOCOLS:
            cfg = harness.ExperimentConfig(spec, proto)
            outs = []
            for k in range(2):
                art, rep = harness.run_experiment(cfg)
                d = tmp_path / f"{i}-{proto}-{k}"
                harness.write_run(art, rep, d)
                outs.append(d)
            same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
                       for f in ("labels.txt", "trace.jsonl", "report.json"))
            if not (rep.passed and harness.verify_dir(outs[0]).passed and same):
                bad.append((spec, proto))
    report(11, not bad, f"{len(MATRIX) * len(harness.PROTOCOLS)} runs: {len(bad)} failed verify or differed on rerun")
    assert not bad


def test_criterion_12_lower_bound():
    rows = [harness.lower_bound_demo(3, delta) for delta in (2, 8, 64)]
    ok = all(r["distinct_s"] == r["delta"] == r["leaves"] and r["max_label_width"] >= r["ceil_log_delta"] for r in rows)
    report(12, ok, "; ".join(f"delta={r['delta']}: {r['distinct_s']} distinct s, width {r['max_label_width']} "
                             f">= ceil(log delta)={r['ceil_log_delta']}" for r in rows))
    assert ok


def test_acknowledged_broadcast_terminates_on_matrix():
    """Supports criterion 10: every node agrees on the termination round."""
    for spec in MATRIX:
        g = generate(parse_family(spec))
        labels, st = assign_fast_labels(g, 0)
        tree, _ = build_2hrt(g, 0)
        progs = make_programs(acknowledged_program, assign_ack_bits(labels, st.informed_round, tree), 0)
        run(g, progs, 40 * st.rounds + 400)
        assert len({p.termination for p in progs}) == 1 and progs[0].termination is not None
