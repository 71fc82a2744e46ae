"""Regenerate the golden parser and report files under tests/golden.

Run after an intentional change to the printer or report layout, then review the diff.
"""

import contextlib
import io
from pathlib import Path

from doobsynth.cli import main
from doobsynth.parser import parse_program
from doobsynth.printer import show_program

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def report(path: Path) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        main(["analyze", str(path.relative_to(ROOT))])
    return buf.getvalue()


def run() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for p in sorted((ROOT / "programs").glob("*.spp")):
        (GOLDEN / f"{p.stem}.parsed").write_text(show_program(parse_program(p.read_text())))
        (GOLDEN / f"{p.stem}.report.txt").write_text(report(p))
        print(f"wrote {p.stem}")


if __name__ == "__main__":
    import os

    os.chdir(ROOT)
    run()
