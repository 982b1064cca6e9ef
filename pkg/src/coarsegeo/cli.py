"""Command line interface.

    coarsegeo run <config> [--out DIR] [--seed N]
    coarsegeo ball --model <file> --radius N [--no-cache]
    coarsegeo report --diff a.json b.json

Exit codes for `run`: 0 when every checked condition passed, 1 when a
violation was found, 2 when all conditions passed but some carried trust
flags (window-limited measurements).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cache import build_ball_cached, cache_dir
from .config import SCHEMA_DOC, build_model, load_config, validate_config
from .errors import CoarseGeoError
from .reporting import diff_reports, emit_report
from .runner import run_experiment


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coarsegeo",
        description="Contracting-system experiments on computable group models.",
        epilog="Config schema:\n" + SCHEMA_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", help="path to a JSON or YAML config")
    run_p.add_argument("--out", help="output directory (overrides config output_dir)")
    run_p.add_argument("--seed", type=int, help="override the config seed")

    ball_p = sub.add_parser("ball", help="build (and cache) a Cayley ball")
    ball_p.add_argument("--model", required=True,
                        help="config file whose model section describes the group")
    ball_p.add_argument("--radius", required=True, type=int)
    ball_p.add_argument("--no-cache", action="store_true")

    rep_p = sub.add_parser("report", help="report utilities")
    rep_p.add_argument("--diff", nargs=2, metavar=("A", "B"), required=True,
                       help="compare two report.json files structurally")
    return parser


def cmd_run(args) -> int:
    raw = load_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = validate_config(raw)
    report = run_experiment(cfg)
    out_dir = args.out or raw.get("output_dir") or "coarsegeo-out"
    written = emit_report(report, out_dir)
    for cond in report.conditions:
        mark = "PASS" if cond.ok else "FAIL"
        if cond.ok and not cond.trusted:
            mark = "PASS?"
        print(f"[{mark}] {cond.id}")
    print(f"report: {written['report']}")
    return report.exit_code()


def cmd_ball(args) -> int:
    raw = load_config(args.model)
    model_cfg = raw.get("model", raw)
    model = build_model(model_cfg)
    ball = build_ball_cached(model, args.radius, use_cache=not args.no_cache)
    spheres = ball.sphere_sizes()
    print(json.dumps({
        "model": model.describe(),
        "radius": args.radius,
        "vertices": ball.vertex_count,
        "spheres": spheres,
        "cache_dir": str(cache_dir()),
    }, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    diffs = diff_reports(args.diff[0], args.diff[1])
    if not diffs:
        print("reports identical")
        return 0
    for d in diffs:
        print(d)
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "ball":
            return cmd_ball(args)
        if args.command == "report":
            return cmd_report(args)
    except CoarseGeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
