"""Command-line entry point.

    ndncache run config.json
    ndncache sweep plan.json --format csv --out results.csv
    ndncache partition exodus --tau 0.15
    ndncache reproduce fig5 --topology exodus --scale desk

Exit status is 0 on success, 1 when any sweep row failed and 2 on bad
input (unreadable files, invalid configs, unknown recipes).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .community import CommunityParams, detect_communities
from .engine import ConfigError, RunConfig, Simulator, prepare_topology
from .experiment import RECIPES, ExperimentPlan, emit_results, reproduce_figure, run_plan
from .topology import TopologyError, bundled_topologies

__all__ = ["main", "build_parser"]

log = logging.getLogger("ndncache")


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_rows(rows, args) -> int:
    text = emit_results(rows, args.format)
    _write(text, args.out)
    failed = [r for r in rows if r.failed]
    for row in failed:
        log.error("failed point %s: %s", row.params, row.error)
    return 1 if failed else 0


def cmd_run(args) -> int:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    sim = Simulator(config, redundancy_check_every=args.check_every)
    report = sim.run()
    _write(report.to_json() + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    return _emit_rows(run_plan(plan, args.workers), args)


def cmd_partition(args) -> int:
    g = prepare_topology(args.topology, args.source_fraction)
    params = CommunityParams(tau=args.tau, target=args.target)
    assignment = detect_communities(g, params, seed=f"community:{args.seed}")
    _write(assignment.to_json() + "\n", args.out)
    return 0


def cmd_reproduce(args) -> int:
    rows = reproduce_figure(
        args.figure,
        topology=args.topology,
        scale=args.scale,
        repetitions=args.reps,
        workers=args.workers,
        seed_base=args.seed_base,
    )
    return _emit_rows(rows, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndncache", description="NDN cooperative caching simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_opts(p, formats=False):
        p.add_argument("--out", "-o", help="output file (default: stdout)")
        if formats:
            p.add_argument("--format", "-f", choices=("csv", "json"), default="csv")
            p.add_argument("--workers", type=int, help="parallel runs (default: $NDNCACHE_WORKERS or 1)")

    p = sub.add_parser("run", help="run one simulation from a JSON config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--check-every", type=int, default=0, metavar="N",
                   help="check one-copy-per-community every N events")
    output_opts(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run an experiment plan and aggregate the results")
    p.add_argument("plan")
    output_opts(p, formats=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("partition", help="detect communities and leaders of a topology")
    p.add_argument("topology", help=f"topology file or bundled name ({', '.join(bundled_topologies())})")
    p.add_argument("--tau", type=float, default=0.15)
    p.add_argument("--target", type=int, help="community count to aim for (overrides --tau)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source-fraction", type=float, default=0.05)
    output_opts(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("reproduce", help="run the sweep behind a figure")
    p.add_argument("figure", help=f"one of {', '.join(RECIPES)}")
    p.add_argument("--topology", default="exodus", help="topology file or bundled name")
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    output_opts(p, formats=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, TopologyError, ValueError, OSError) as exc:
        print(f"ndncache: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
