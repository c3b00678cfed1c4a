"""Scenario-runner command line.

Subcommands:
    plan <scenario>     run one scenario, write <name>.json, check asserts
    suite <dir>         run every *.scenario in a directory, report JSON
                        on stdout
    render <result>     draw a result JSON as an SVG

Exit codes: 0 success, 1 scenario failure (assertion, no path),
2 input error (bad file, bad arguments).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from .base_planner import PlanningError
from .costmap import GridFormatError, build_costmap, load_obstacle_grid
from .render import render_svg
from .scenario import (
    ScenarioError,
    evaluate_assertions,
    parse_scenario,
    result_from_dict,
    result_to_dict,
    run_suite,
    run_with_replans,
    write_json_atomic,
    write_text_atomic,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actuator-opt",
        description="Actuator-space path optimization scenario runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="run a single scenario")
    p_plan.add_argument("scenario", help="scenario file to run")
    p_plan.add_argument("--out", default=".", metavar="DIR",
                        help="directory for the result JSON (default: .)")
    p_plan.add_argument("--replan", type=int, default=0, metavar="N",
                        help="re-plan N times with the start advanced along the result")
    p_plan.add_argument("--windowed-cost", action="store_true",
                        help="evaluate solver probes on the damping window only")

    p_suite = sub.add_parser("suite", help="run every *.scenario in a directory")
    p_suite.add_argument("directory", help="directory of scenario files")
    p_suite.add_argument("--out", default=None, metavar="DIR",
                         help="also write per-scenario result JSONs here")
    p_suite.add_argument("--windowed-cost", action="store_true",
                         help="evaluate solver probes on the damping window only")

    p_render = sub.add_parser("render", help="draw a result JSON as an SVG")
    p_render.add_argument("result", help="result JSON written by 'plan' or 'suite --out'")
    p_render.add_argument("--out", default=".", metavar="DIR",
                          help="directory for the SVG (default: .)")
    return parser


def _cmd_plan(args) -> int:
    scenario = parse_scenario(args.scenario)
    result = run_with_replans(scenario, args.replan, windowed=args.windowed_cost)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result_path = out_dir / f"{scenario.name}.json"
    write_json_atomic(result_path, result_to_dict(result))
    print(f"wrote {result_path}")
    failed = False
    for check in evaluate_assertions(scenario, result):
        status = "PASS" if check["passed"] else "FAIL"
        failed |= not check["passed"]
        print(f"{status} {check['key']} {check['op']} {check['limit']} "
              f"(actual {check['actual']})")
    if result.metrics.collision:
        print("WARNING optimized path is in collision")
    return 1 if failed else 0


def _cmd_suite(args) -> int:
    return run_suite(args.directory, sys.stdout, out_dir=args.out,
                     windowed=args.windowed_cost)


def _cmd_render(args) -> int:
    with open(args.result) as fh:
        result = result_from_dict(json.load(fh))
    if result.scenario_file is None:
        raise ScenarioError(f"{args.result}: no scenario file recorded, cannot rebuild the map")
    scenario = parse_scenario(result.scenario_file)
    with open(scenario.grid_path, "rb") as fh:
        cmap = build_costmap(load_obstacle_grid(fh), scenario.costmap_params)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    render_svg(result, cmap, buf)
    svg_path = out_dir / f"{result.scenario_name}.svg"
    write_text_atomic(svg_path, buf.getvalue())
    print(f"wrote {svg_path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        if args.command == "suite":
            return _cmd_suite(args)
        return _cmd_render(args)
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioError, GridFormatError, json.JSONDecodeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
