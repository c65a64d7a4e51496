"""Command-line entry point.

Subcommands:

* run <config.json>            run one scenario, write trace + report
* verify                       run every bundled scenario
* verify --negative-controls   run the corrupted fixtures (exit 1 expected)
* schedule inspect <descriptor> --n N
                               print sigma prefix, profile table, markers
* geometry cb <config.json>    angle cosine + closed-sum margin as JSON
* geometry incl <config.json>  inclination / inner-inclination estimates

Exit codes: 0 all checks pass, 1 checker failure, 2 config error.
The PROJPROD_OUTPUT_DIR environment variable overrides output locations.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from projprod import geometry, schedules
from projprod.scenarios import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    ConfigError,
    _Runtime,
    load_config,
    run_scenario,
    verify_all,
    verify_negative_controls,
)


def _load_descriptor(arg: str) -> dict:
    path = Path(arg)
    if path.exists():
        return json.loads(path.read_text())
    try:
        return json.loads(arg)
    except json.JSONDecodeError:
        raise ConfigError(arg, "neither a file nor inline JSON") from None


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    _, report = run_scenario(cfg, out_dir=args.out)
    report.print_lines()
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    if args.negative_controls:
        report, code = verify_negative_controls(out_dir=args.out)
    else:
        report, code = verify_all(out_dir=args.out)
    report.print_lines()
    return code


def cmd_schedule_inspect(args) -> int:
    desc = _load_descriptor(args.descriptor)
    try:
        sched = schedules.from_descriptor(desc)
        prof = schedules.profile(sched, args.n)
    except (ValueError, KeyError) as exc:
        raise ConfigError("schedule", str(exc)) from exc
    out = sys.stdout
    out.write("# sigma prefix\nn,label\n")
    for n, label in enumerate(sched.prefix(args.n), start=1):
        out.write(f"{n},{int(label)}\n")
    out.write("# profile\nlabel,occurrences,gap_index,class\n")
    for label, count, gap, cls in prof.to_rows():
        out.write(f"{label},{count},{gap},{cls}\n")
    out.write("# markers\n")
    out.write(",".join(str(k) for k in prof.markers) + "\n")
    return EXIT_OK


def cmd_geometry(args) -> int:
    cfg = load_config(args.config)
    if not cfg.subspaces:
        raise ConfigError("subspaces", "geometry commands need subspaces")
    rt = _Runtime(cfg)
    subs = rt.ordered_subspaces()
    if args.quantity == "cb":
        report = geometry.friedrichs_cb(subs)
        closed = geometry.closed_sum_criterion(subs)
        payload = {"cb": report.to_dict(), "closed_sum": closed.to_dict()}
    else:
        payload = {
            "inclination": geometry.inclination(
                subs, grid_resolution=args.resolution,
                restarts=args.restarts, seed=args.seed).to_dict(),
            "inner_inclination": geometry.inner_inclination(
                subs, grid_resolution=args.resolution,
                restarts=args.restarts, seed=args.seed).to_dict(),
        }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projprod",
        description="Scheduled products of orthogonal projections: "
                    "experiments, schedule classification, subspace "
                    "geometry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run the bundled suite")
    p_verify.add_argument("--negative-controls", action="store_true",
                          help="run corrupted fixtures (exit 1 expected)")
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_sched = sub.add_parser("schedule", help="schedule tools")
    sched_sub = p_sched.add_subparsers(dest="subcommand", required=True)
    p_inspect = sched_sub.add_parser("inspect",
                                     help="print prefix, profile, markers")
    p_inspect.add_argument("descriptor",
                           help="descriptor JSON file or inline JSON")
    p_inspect.add_argument("--n", type=int, default=100)
    p_inspect.set_defaults(func=cmd_schedule_inspect)

    p_geo = sub.add_parser("geometry", help="subspace geometry")
    geo_sub = p_geo.add_subparsers(dest="quantity", required=True)
    for quantity in ("cb", "incl"):
        p_q = geo_sub.add_parser(quantity)
        p_q.add_argument("config")
        p_q.add_argument("--resolution", type=int, default=4096)
        p_q.add_argument("--restarts", type=int, default=8)
        p_q.add_argument("--seed", type=int, default=0)
        p_q.set_defaults(func=cmd_geometry, quantity=quantity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
