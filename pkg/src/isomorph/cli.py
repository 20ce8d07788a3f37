"""Command line driver.

Runs one or more program files as a single event stream and prints a
summary.  With ``--out`` the final program, the obligation ledger, and
the machine readable report land in the named directory.

Exit status: 0 when everything passed, 1 when some check found a
counterexample, 2 when a check ran out of budget, 3 for unusable input.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .evaluator import EnumConfig, apply_settings
from .script import emit_report, run_files
from .sexpr import SexprError
from .syntax import ParseError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse normally exits with status 2, which this tool reserves
    # for exhausted check budgets
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="isomorph",
        description="Run refinement scripts and report every checked claim.",
    )
    p.add_argument(
        "scripts",
        nargs="+",
        metavar="SCRIPT",
        help="program files, executed in order as one event stream",
    )
    p.add_argument(
        "--out",
        metavar="DIR",
        help="write program.lisp, obligations.json, report.json here",
    )
    p.add_argument("--depth", type=int, help="value nesting bound")
    p.add_argument(
        "--int-range",
        metavar="LO:HI",
        help="integer atoms to enumerate, inclusive on both ends",
    )
    p.add_argument("--case-cap", type=int, help="cases per obligation")
    p.add_argument("--fuel", type=int, help="evaluation step budget")
    p.add_argument(
        "--seed",
        type=int,
        help="accepted for interface stability; enumeration is deterministic",
    )
    p.add_argument(
        "--keep-going",
        action="store_true",
        help="record failures and continue instead of stopping",
    )
    p.add_argument("--format", choices=("json", "text"), default="text")
    return p


def _config_from_flags(args) -> Optional[EnumConfig]:
    settings = []
    if args.depth is not None:
        settings.append((":depth", args.depth))
    if args.int_range is not None:
        lo, sep, hi = args.int_range.partition(":")
        try:
            bounds = (int(lo), int(hi))
        except ValueError:
            raise UsageError(f"--int-range wants LO:HI, got {args.int_range!r}")
        if not sep:
            raise UsageError(f"--int-range wants LO:HI, got {args.int_range!r}")
        settings.append((":int-range", bounds))
    if args.case_cap is not None:
        settings.append((":case-cap", args.case_cap))
    if args.fuel is not None:
        settings.append((":fuel", args.fuel))
    if not settings:
        return None
    return apply_settings(EnumConfig(), settings)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_flags(args)
        world, report = run_files(
            args.scripts,
            out_dir=args.out,
            config=config,
            keep_going=args.keep_going,
        )
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 3
    except (OSError, ParseError, SexprError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    sys.stdout.write(emit_report(report, args.format))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
