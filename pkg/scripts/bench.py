"""Time the analysis of every program in a directory, repeated a few times.

Usage: python3 scripts/bench.py [DIR] [--repeat N]
"""

import argparse
import statistics
import time
from pathlib import Path

from doobsynth.analysis import AnalysisRequest, analyze
from doobsynth.report import render_table

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("suite", nargs="?", default=str(ROOT / "programs"))
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rows = []
    for path in sorted(Path(args.suite).glob("*.spp")):
        times, status = [], "error"
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            status = analyze(AnalysisRequest(str(path))).status
            times.append(time.perf_counter() - t0)
        rows.append({"program": path.stem, "status": status,
                     "best": f"{min(times):.3f}", "median": f"{statistics.median(times):.3f}"})
    print(render_table(rows, ["program", "status", "best", "median"]), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
