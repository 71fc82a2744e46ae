import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import PROGRAMS  # noqa: E402

from doobsynth.analysis import AnalysisRequest, analyze  # noqa: E402
from doobsynth.parser import parse_program  # noqa: E402
from doobsynth.recurrence import extract_recurrences  # noqa: E402


@pytest.fixture(scope="session")
def analyses():
    """Pragma-driven analyses of every shipped program, computed once."""
    return {p.stem: analyze(AnalysisRequest(str(p))) for p in sorted(PROGRAMS.glob("*.spp"))}


def load(name: str):
    prog = parse_program((PROGRAMS / f"{name}.spp").read_text())
    return prog, extract_recurrences(prog)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
