"""Headless scenario runner.

Subcommands reproduce the tracking experiment shapes (track-grasp,
track-pull, track-both), run the full traction flow from a scenario plus a
command script (traction), recompute error reports from saved traces
(analyze), and expose a live session to the operator console (serve).
"""

import argparse
import dataclasses
import sys

from .errors import AnalysisError, ConfigError
from .metrics import ErrorReport, read_trace, write_report
from .runner import run_stats, run_tracking, run_traction
from .scenario import load_scenario, load_script
from .service import run_serve


def _add_common(parser):
    parser.add_argument("--scenario", required=True, help="scenario YAML file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override scenario seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traction-sim",
        description="force-controlled tissue traction simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, mode in (
        ("track-grasp", "grasp"),
        ("track-pull", "pull"),
        ("track-both", "both"),
    ):
        p = sub.add_parser(name, help=f"{mode}-force tracking grid")
        _add_common(p)
        p.add_argument("--repeat", type=int, default=None, help="repetitions per cell")
        p.set_defaults(mode=mode)

    p = sub.add_parser("traction", help="full resection operation flow")
    _add_common(p)
    p.add_argument("--script", default=None, help="operator command script YAML")

    p = sub.add_parser("analyze", help="error report from existing trace files")
    p.add_argument("traces", nargs="+", help="trace CSV files")
    p.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"), required=True)
    p.add_argument("--theta", type=float, default=0.0, help="grasp angle label (deg)")
    p.add_argument("--out", default="report.csv", help="report CSV path")

    p = sub.add_parser("serve", help="live session over a websocket")
    _add_common(p)
    p.add_argument("--script", default=None, help="optional scripted commands")
    p.add_argument("--port", type=int, default=None, help="override serve port")
    p.add_argument("--time-scale", type=float, default=None, help="sim seconds per wall second")

    return parser


def _load(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
        scenario = dataclasses.replace(
            scenario,
            simulation=dataclasses.replace(scenario.simulation, seed=args.seed),
        )
    return scenario


def _script_for(args, scenario):
    path = args.script
    if path is None and scenario.traction is not None:
        path = scenario.traction.script
    return load_script(path) if path else []


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("track-grasp", "track-pull", "track-both"):
            scenario = _load(args)
            if scenario.tracking is None or scenario.tracking.mode != args.mode:
                raise ConfigError(
                    f"scenario.tracking: mode {args.mode!r} required for {args.command}"
                )
            return run_tracking(scenario, args.out, repeat=args.repeat)
        if args.command == "traction":
            scenario = _load(args)
            return run_traction(scenario, args.out, script=_script_for(args, scenario))
        if args.command == "analyze":
            per_run = []
            for path in args.traces:
                records = read_trace(path)
                per_run.append(run_stats(records, tuple(args.window)))
            report = ErrorReport.from_runs({args.theta: per_run})
            write_report(args.out, report)
            return 0
        if args.command == "serve":
            scenario = _load(args)
            return run_serve(
                scenario,
                script=_script_for(args, scenario),
                port=args.port,
                time_scale=args.time_scale,
                out_dir=args.out,
            )
    except (ConfigError, AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
