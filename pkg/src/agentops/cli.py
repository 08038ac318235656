"""Command-line entry point.

    agentops run <file> --out <dir>
    agentops check <file>
    agentops compare <file> [--out <dir>]
    agentops builtin <name>|all [--out <dir>] [--check] [--compare] [--dump]

Exit status is 0 on success, 1 when a run diverges, misses its expected
point, or a check fails, and 2 for unusable input.
"""
import argparse
import json
import os
import sys

from .commands import check_command, compare_command, render_check, render_compare, run_command
from .errors import AgentOpsError
from .scenario import BUILTINS, builtin_document, load_builtin, load_scenario


def _common(p):
    p.add_argument("--max-rounds", type=int, metavar="N", help="override stop.max_rounds")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    p.add_argument("--per-agent", action="store_true", help="also write trajectory_agents.csv")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="agentops",
        description="Run factored multi-agent projection/prox dynamics from scenario files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="iterate a scenario and write trajectory + summary")
    p.add_argument("file")
    p.add_argument("--out", required=True, help="output directory")
    _common(p)

    p = sub.add_parser("check", help="run the invariant/convergence diagnostics")
    p.add_argument("file")
    _common(p)

    p = sub.add_parser("compare", help="compare against monolithic/averaging/grid baselines")
    p.add_argument("file")
    p.add_argument("--out", help="also write compare.json and compare.txt here")
    _common(p)

    p = sub.add_parser("builtin", help="run a built-in scenario")
    p.add_argument("name", choices=sorted(BUILTINS) + ["all"])
    p.add_argument("--out", help="output directory (per-scenario subdirectories for 'all')")
    p.add_argument("--check", action="store_true", help="run the check battery instead of a plain run")
    p.add_argument("--compare", action="store_true", help="run the baseline comparison instead")
    p.add_argument("--dump", action="store_true", help="print the scenario document and exit")
    _common(p)
    return parser


def _say(args, text):
    if not args.quiet:
        print(text)


def _do_run(args, scenario, out):
    summary = run_command(scenario, out, per_agent=args.per_agent)
    if not args.quiet or not summary["ok"]:
        print(json.dumps(summary, indent=2))
    return summary["ok"]


def _do_check(args, scenario):
    report = check_command(scenario)
    if not args.quiet or not report["ok"]:
        print(render_check(report))
    return report["ok"]


def _do_compare(args, scenario, out):
    report = compare_command(scenario)
    text = render_compare(report)
    _say(args, text)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "compare.json"), "w") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
        with open(os.path.join(out, "compare.txt"), "w") as f:
            f.write(text + "\n")
    return report["ok"]


def _apply_overrides(args, scenario):
    if args.max_rounds is not None:
        scenario = scenario.with_max_rounds(args.max_rounds)
    return scenario


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "builtin":
            names = sorted(BUILTINS) if args.name == "all" else [args.name]
            ok = True
            for name in names:
                if args.dump:
                    sys.stdout.write(builtin_document(name))
                    continue
                scenario = _apply_overrides(args, load_builtin(name))
                out = os.path.join(args.out, name) if (args.out and args.name == "all") else args.out
                if args.check:
                    ok &= _do_check(args, scenario)
                elif args.compare:
                    ok &= _do_compare(args, scenario, out)
                else:
                    ok &= _do_run(args, scenario, out)
            return 0 if ok else 1

        scenario = _apply_overrides(args, load_scenario(args.file))
        if args.command == "run":
            ok = _do_run(args, scenario, args.out)
        elif args.command == "check":
            ok = _do_check(args, scenario)
        else:
            ok = _do_compare(args, scenario, args.out)
        return 0 if ok else 1
    except (AgentOpsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
