"""Command-line entry point.

Exit codes: 0 when every requested analysis ran and found nothing, 1 when a
violation or incompleteness was found, 2 on unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import RvrError
from .report import RunOptions, emit, run
from .scenario import parse_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

_HELP = {
    "check": "run every analysis listed in the scenario",
    "bell": "run only the CHSH analysis",
    "entropy": "run only the entropy analysis",
    "oracle": "compare the float LP against the exact rational hull oracle",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvrkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in _HELP.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON file, or '-' for stdin")
        p.add_argument("--format", choices=("text", "structured"), default="text")
        p.add_argument("--timestamp", action="store_true", help="include a UTC timestamp in the report")
        if name in ("check", "oracle"):
            p.add_argument("--max-subset", type=int, default=None, metavar="N")
        if name in ("check", "bell"):
            p.add_argument("--full-sphere", action="store_true", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        text = sys.stdin.read() if args.scenario == "-" else Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"rvrkit: cannot read {args.scenario}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    max_subset = getattr(args, "max_subset", None)
    if max_subset is not None and max_subset < 2:
        print("rvrkit: --max-subset must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        scenario = parse_scenario(text)
    except RvrError as exc:
        print(f"rvrkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    opts = RunOptions(args.command, max_subset, getattr(args, "full_sphere", None), args.timestamp)
    report = run(scenario, opts)
    sys.stdout.write(emit(report, args.format))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
