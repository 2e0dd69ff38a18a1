"""Command line: gen, label, run, verify, sweep, report.

Exit status is 0 when every invariant holds, 1 on an invariant failure or a
replay divergence, and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .labeling.labels import LabelError, save_table
from .netgraph import GraphError, save_graph


def _config(args: argparse.Namespace) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        graph=args.graph, protocol=args.protocol, source=args.source, seed=args.seed,
        horizon_factor=args.horizon_factor, express_c=args.express_c, retry_budget=args.retry_budget,
        dissemination=args.dissemination,
    )


def _emit_failures(rep: harness.Report) -> None:
    fails = [{"check": c.name, "detail": c.detail, "locator": c.locator} for c in rep.failures()]
    if fails:
        print(json.dumps({"failures": fails}, sort_keys=True), file=sys.stderr)


def cmd_gen(args: argparse.Namespace) -> int:
    data = save_graph(harness.load_graph_arg(args.graph))
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    cfg = _config(args)
    labels, *_ = harness.make_labels(cfg, harness.load_graph_arg(cfg.graph))
    text = save_table(labels)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    art, rep = harness.run_experiment(cfg)
    if args.out:
        harness.write_run(art, rep, Path(args.out))
    sys.stdout.write(rep.to_text())
    _emit_failures(rep)
    return 0 if rep.passed else 1


def cmd_verify(args: argparse.Namespace) -> int:
    if args.dir:
        rep = harness.verify_dir(Path(args.dir))
    else:
        if not (args.graph and args.labels and args.trace):
            raise SystemExit("verify needs --dir, or --graph, --labels and --trace")
        cfg = _config(args)
        rep = harness.verify(cfg, harness.load_graph_arg(args.graph), Path(args.labels).read_text(),
                             Path(args.trace).read_text())
    sys.stdout.write(rep.to_text())
    _emit_failures(rep)
    return 0 if rep.passed else 1


def cmd_sweep(args: argparse.Namespace) -> int:
    sizes = [int(x) for x in args.sizes.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    res = harness.sweep(args.family, sizes, args.protocol, seeds, workers=args.workers)
    text = res.csv_text()
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    for model in harness.FIT_MODELS:
        trend = "no growth" if res.trend[model] else "GROWING"
        print(f"max rounds/({model}) = {res.fits[model]:.4f} [{trend}]", file=sys.stderr)
    return 0 if res.passed else 1


def cmd_report(args: argparse.Namespace) -> int:
    sys.stdout.write(harness.report_text(Path(args.path)))
    return 0


def cmd_lower_bound(args: argparse.Namespace) -> int:
    out = harness.lower_bound_demo(args.depth, args.delta)
    print(json.dumps(out, sort_keys=True))
    return 0 if out["passed"] else 1


def _add_common(p: argparse.ArgumentParser, graph_required: bool = True) -> None:
    p.add_argument("--graph", required=graph_required, help="family string such as path:n=64, or a graph file")
    p.add_argument("--protocol", default="fast", choices=harness.PROTOCOLS)
    p.add_argument("--source", type=int, default=0, help="broadcast source or gathering sink")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon-factor", type=int, default=8)
    p.add_argument("--express-c", type=float, default=60.0)
    p.add_argument("--retry-budget", type=int, default=50)
    p.add_argument("--dissemination", default="oracle-injected-D", choices=("oracle-injected-D", "stub-size-learning"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radiolabel", description="Labeling schemes for radio-network broadcast and gossip")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a generated graph in the edge-list format")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("label", help="compute a label table")
    _add_common(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("run", help="label, simulate and check; writes trace and report with --out")
    _add_common(p)
    p.add_argument("--out", help="directory for config, graph, labels, trace and report")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="replay a stored trace against its label table")
    _add_common(p, graph_required=False)
    p.add_argument("--dir", help="run directory written by 'run --out'")
    p.add_argument("--labels")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="vary n over a family and fit round counts")
    p.add_argument("--family", required=True, help="template, e.g. complete-binary-tree or random-connected")
    p.add_argument("--sizes", default="64,128,256,512,1024,2048,4096")
    p.add_argument("--protocol", default="express", choices=harness.PROTOCOLS)
    p.add_argument("--seeds", default="0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="print a run directory's report or summarize a sweep CSV")
    p.add_argument("path")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("lower-bound", help="star-path demonstration of the log(delta) label length")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--delta", type=int, default=8)
    p.set_defaults(func=cmd_lower_bound)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, LabelError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
