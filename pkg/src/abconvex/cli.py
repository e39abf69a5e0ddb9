"""Command line: ``abconvex {check,scenario,suite,plot-data}``.

Exit status is 0 when every check passes (or is not applicable), 1 when
any check fails and 2 on usage or load errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .families import DomainError
from .instance import InstanceError, load_instance, parse_rational
from .plotdata import emit_plot_data
from .reports import FAIL, Report
from .scenarios import CATALOG, UnknownScenarioError, run_instance, run_scenario
from .suite import run_property_suite

__all__ = ["main"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    # accepted before or after the subcommand; SUPPRESS keeps a value given
    # before the subcommand from being reset by the subparser default
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=["text", "json", "csv"], default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="write output to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="abconvex", description="Exact abstract-convexity checks.")
    parser.add_argument("--format", choices=["text", "json", "csv"], default=None)
    parser.add_argument("--out", default=None, help="write output to this path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="run the checks of an instance file")
    p.add_argument("instance")

    p = sub.add_parser("scenario", parents=[common], help="run a built-in scenario, 'all', or a file")
    p.add_argument("name", help=f"one of {', '.join(CATALOG)}, 'all', or a path")

    p = sub.add_parser("suite", parents=[common], help="seeded random property suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)

    p = sub.add_parser("plot-data", parents=[common], help="sample functions of a real-line instance")
    p.add_argument("instance", help="instance file or built-in scenario name")
    p.add_argument("--functions", default="", help="comma-separated names or expressions")
    p.add_argument("--range", dest="range_", default="-4:4", help="lo:hi")
    p.add_argument("--step", default="1/4")
    return parser


def _split_functions(text: str) -> list[str]:
    """Split on commas outside parentheses, so ``max(0,x)`` stays whole."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return [t for t in out if t]


def _parse_range(text: str):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"--range expects lo:hi, got {text!r}")
    return parse_rational(lo, "--range"), parse_rational(hi, "--range")


def _reports_csv(reports: list[Report]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "rule", "status", "hypothesis", "conclusion", "witnesses"])
    for r in reports:
        for e in r.entries:
            w.writerow([r.scenario, e.rule, e.status, e.hypothesis, e.conclusion, len(e.witnesses)])
    return buf.getvalue()


def _render(reports: list[Report], fmt: str, many: bool) -> str:
    if fmt == "json":
        if many:
            return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True) + "\n"
        return reports[0].dumps()
    if fmt == "csv":
        return _reports_csv(reports)
    return "\n".join(r.to_text() for r in reports) + "\n"


def _run(args) -> tuple[str, int]:
    fmt = args.format
    if args.command == "plot-data":
        inst = _load_any(args.instance)
        lo, hi = _parse_range(args.range_)
        step = parse_rational(args.step, "--step")
        if step <= 0:
            raise UsageError("--step must be positive")
        text = emit_plot_data(inst, _split_functions(args.functions), (lo, hi), step)
        if fmt == "json":
            rows = list(csv.reader(io.StringIO(text)))
            text = json.dumps({"columns": rows[0], "rows": rows[1:]}, indent=2) + "\n"
        return text, EXIT_OK

    if args.command == "check":
        reports, many = [run_instance(load_instance(args.instance))], False
    elif args.command == "scenario":
        names = list(CATALOG) if args.name == "all" else [args.name]
        reports, many = [run_scenario(n) for n in names], args.name == "all"
    else:
        if args.count <= 0:
            raise UsageError("--count must be positive")
        reports, many = [run_property_suite(args.seed, args.count)], False
    code = EXIT_FAIL if any(r.status == FAIL for r in reports) else EXIT_OK
    return _render(reports, fmt or "text", many), code


def _load_any(name: str):
    from .scenarios import load_scenario

    return load_scenario(name)


def _glue_negative_values(argv: list[str]) -> list[str]:
    """``--range -2:2`` would read as an option; glue it to its flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--range", "--step") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        text, code = _run(args)
    except (UsageError, InstanceError, UnknownScenarioError, DomainError, ValueError) as exc:
        print(f"abconvex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
