"""Run every scenario file in scenarios/ through the check pipeline and summarise."""

import sys
from pathlib import Path

from rvrkit.report import RunOptions, run
from rvrkit.scenario import parse_scenario

ROOT = Path(__file__).resolve().parents[1] / "scenarios"


def main() -> int:
    worst = 0
    for path in sorted(ROOT.glob("*.json")):
        rep = run(parse_scenario(path.read_text(encoding="utf-8")), RunOptions("check"))
        found = "; ".join(rep.violations) or "no violations"
        print(f"{path.name:28s} exit {rep.exit_code}  {found}")
        worst = max(worst, rep.exit_code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
