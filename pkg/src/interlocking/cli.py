"""Command-line front end.

Exit codes:

* ``validate``: 0 without ERROR diagnostics, 1 otherwise;
* ``explore``: 0 when safe and complete, 2 on accidents, 3 when the state
  cap was hit (accidents take precedence because they are definite);
* ``flank-check``: 0 PASS, 4 FAIL, 5 VACUOUS;
* ``trace``: 0, or 1 for an unknown digest;
* 64 for usage errors, 1 for unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import report as rpt
from .explorer import DEFAULT_CAP, classify_terminals, explore, flank_check, trace_to
from .layout import LayoutError, parse_layout
from .scenario import Scenario, ScenarioError, load_scenario
from .table import TableError, parse_table, validate_table

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ACCIDENT = 2
EXIT_INCOMPLETE = 3
EXIT_FLANK_FAIL = 4
EXIT_FLANK_VACUOUS = 5
EXIT_USAGE = 64

FLANK_EXIT = {"PASS": EXIT_OK, "FAIL": EXIT_FLANK_FAIL, "VACUOUS": EXIT_FLANK_VACUOUS}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fixtures_dir() -> Path:
    return Path(str(resources.files("interlocking") / "fixtures"))


def resolve_scenario(name: str) -> Path:
    """A scenario path, or the name of a shipped fixture scenario."""
    path = Path(name)
    if path.exists():
        return path
    shipped = fixtures_dir() / f"{name}.scenario"
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"no scenario file {name!r} and no shipped fixture of that name")


def explore_exit_code(report) -> int:
    if report.accident_markings:
        return EXIT_ACCIDENT
    if report.incomplete:
        return EXIT_INCOMPLETE
    return EXIT_OK


def _onoff(value: str) -> bool:
    return value == "on"


def apply_overrides(scenario: Scenario, args) -> Scenario:
    changes = {}
    for key in ("auto", "priorities", "flank"):
        value = getattr(args, key, None)
        if value is not None:
            changes[key] = _onoff(value)
    if getattr(args, "remove_signal", None):
        ids = tuple(s for item in args.remove_signal for s in item.split(",") if s)
        changes["removed_signals"] = ids
    return scenario.with_modes(**changes) if changes else scenario


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="interlocking", description="Verify railway interlocking tables by state-space search.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a layout and interlocking table")
    v.add_argument("--layout", required=True)
    v.add_argument("--table", required=True)

    def scenario_args(p, *, fmt=True):
        p.add_argument("--scenario", required=True, help="scenario file or shipped fixture name")
        for key in ("auto", "priorities", "flank"):
            p.add_argument(f"--{key}", choices=("on", "off"))
        p.add_argument("--remove-signal", action="append", metavar="ID",
                       help="remove a signal (repeatable, or comma separated)")
        p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="state budget")
        if fmt:
            p.add_argument("--format", choices=("text", "machine"), default="text")

    e = sub.add_parser("explore", help="explore the full state space of a scenario")
    scenario_args(e)
    e.add_argument("--trace", metavar="DIGEST", help="also print the shortest trace to this marking")

    f = sub.add_parser("flank-check", help="prove flank protection with a signal removed")
    scenario_args(f, fmt=False)

    t = sub.add_parser("trace", help="shortest firing sequence to a marking")
    scenario_args(t, fmt=False)
    t.add_argument("--trace", metavar="DIGEST", required=True)
    return parser


def run_validate(layout_path, table_path, out=None) -> int:
    out = out or sys.stdout
    layout = parse_layout(Path(layout_path).read_text(encoding="utf-8"))
    table = parse_table(Path(table_path).read_text(encoding="utf-8"))
    diags = validate_table(table, layout)
    for d in diags:
        print(d, file=out)
    return EXIT_INVALID if any(d.severity == "ERROR" for d in diags) else EXIT_OK


def _print_trace(report, digest, out) -> None:
    for k, tr in enumerate(trace_to(report, digest), start=1):
        print(f"{k:4d}. {tr}", file=out)


def run_explore(scenario: Scenario, *, cap=DEFAULT_CAP, fmt="text", trace=None, out=None) -> int:
    out = out or sys.stdout
    result = explore(scenario, cap)
    classes = classify_terminals(result)
    if fmt == "machine":
        out.write(rpt.machine_report(result, classes).render())
    else:
        out.write(rpt.render_text(result, classes))
        out.write(rpt.render_terminal_table(result, classes))
    if trace:
        print(f"trace to {trace}:", file=out)
        _print_trace(result, trace, out)
    return explore_exit_code(result)


def run_flank_check(scenario: Scenario, *, cap=DEFAULT_CAP, out=None) -> int:
    out = out or sys.stdout
    if not scenario.modes.removed_signals:
        raise UsageError("flank-check needs a removed signal (scenario mode remove_signal= or --remove-signal)")
    verdict = flank_check(scenario, cap)
    out.write(rpt.render_flank_verdict(verdict))
    return FLANK_EXIT[verdict.verdict]


def run_trace(scenario: Scenario, digest: str, *, cap=DEFAULT_CAP, out=None) -> int:
    out = out or sys.stdout
    result = explore(scenario, cap)
    _print_trace(result, digest, out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            return run_validate(args.layout, args.table)
        if args.cap < 1:
            raise UsageError("--cap must be positive")
        scenario = apply_overrides(load_scenario(resolve_scenario(args.scenario)), args)
        scenario.check()
        if args.verb == "explore":
            return run_explore(scenario, cap=args.cap, fmt=args.format, trace=args.trace)
        if args.verb == "flank-check":
            return run_flank_check(scenario, cap=args.cap)
        return run_trace(scenario, args.trace, cap=args.cap)
    except UsageError as exc:
        print(f"interlocking: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as exc:
        print(f"interlocking: {exc.args[0]}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, LayoutError, TableError, ScenarioError, ValueError) as exc:
        print(f"interlocking: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
