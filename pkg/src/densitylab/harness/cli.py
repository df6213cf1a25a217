"""Command line: ``densitylab {run, verify, plot, list-presets}``.

Exit codes: 0 success (for ``verify``: every check passed), 1 a check failed
or lacked coverage, 2 invalid configuration or usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from densitylab.errors import DensityLabError
from densitylab.harness.plot import PLOT_SPECS, write_plot
from densitylab.harness.runner import RunReport, read_trajectory, run_batch
from densitylab.harness.scenario import list_presets, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _scenarios(args):
    out = []
    for ref in args.scenario:
        sc = load_scenario(ref)
        if args.step is not None or args.duration is not None:
            sc = sc.with_integrator(args.step, args.duration)
        out.append(sc)
    return out


def _summary(report: RunReport, stream) -> None:
    print(f"{report.scenario}: {report.verdict.upper()}  (stops: {', '.join(sorted(set(report.stops)))})",
          file=stream)
    for c in report.checks:
        margin = "" if c.margin is None else f"  margin={c.margin:.6g}"
        print(f"  [{c.verdict}] {c.name}{margin}", file=stream)


def cmd_run(args) -> int:
    reports = run_batch(_scenarios(args), args.out, args.format, args.workers)
    for rep in reports:
        _summary(rep, sys.stdout)
        print(f"  wrote {Path(args.out) / rep.scenario}/", file=sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = run_batch(_scenarios(args), args.out, "csv", args.workers)
    for rep in reports:
        if args.json:
            sys.stdout.write(rep.to_json())
        else:
            _summary(rep, sys.stdout)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_plot(args) -> int:
    trajs = [read_trajectory(p) for p in args.traj]
    scenario = load_scenario(args.scenario) if args.scenario else None
    path = write_plot(trajs, args.spec, args.out, scenario)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_list(args) -> int:
    rows = list_presets()
    width = max((len(r["name"]) for r in rows), default=0)
    for r in rows:
        print(f"{r['name']:<{width}}  {r['figure']:<18}  {r['description']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densitylab", description="Simulate and verify density systems and density-based adaptive control.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--scenario", action="append", required=True,
                       help="preset name (or unique prefix) or path to a scenario JSON; repeatable")
        p.add_argument("--step", type=float, help="override the integration step")
        p.add_argument("--duration", type=float, help="override the final time")
        p.add_argument("--workers", type=int, default=1, help="run scenarios concurrently")

    p = sub.add_parser("run", help="integrate a scenario and write trajectories plus report.json")
    scenario_args(p)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run a scenario's checks; exit 0 iff all pass")
    scenario_args(p)
    p.add_argument("--out", default=None, help="also write outputs to this directory")
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render trajectory files to SVG")
    p.add_argument("--traj", nargs="+", required=True, help="trajectory CSV/JSON files")
    p.add_argument("--spec", choices=PLOT_SPECS, required=True)
    p.add_argument("--out", required=True, help="output .svg path")
    p.add_argument("--scenario", help="scenario for bound curves and forbidden regions")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("list-presets", help="list the bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DensityLabError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
