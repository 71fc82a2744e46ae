"""Frontend: golden canonical forms, print/parse round trip and diagnostics."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import GOLDEN, PROGRAMS, linear_program, mixed_program

from doobsynth.lexer import ParseError
from doobsynth.parser import parse_hints, parse_program, parse_seed, parse_variant
from doobsynth.printer import show_expr, show_hint, show_program, show_variant
from doobsynth.recurrence import RecurrenceError, extract_recurrences

NAMES = sorted(p.stem for p in PROGRAMS.glob("*.spp"))


@pytest.mark.parametrize("name", NAMES)
def test_golden_canonical_form(name):
    text = show_program(parse_program((PROGRAMS / f"{name}.spp").read_text()))
    assert text == (GOLDEN / f"{name}.parsed").read_text()


@pytest.mark.parametrize("name", NAMES)
def test_round_trip_shipped(name):
    prog = parse_program((PROGRAMS / f"{name}.spp").read_text())
    again = parse_program(show_program(prog))
    assert show_program(again) == show_program(prog)


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_round_trip_random(seed):
    r = random.Random(seed)
    text = linear_program(r) if seed % 2 else mixed_program(r)
    prog = parse_program(text)
    assert show_program(parse_program(show_program(prog))) == show_program(prog)


def test_unicode_and_ascii_agree():
    a = parse_program("x[0] := 0;\nwhile (x ≠ 3) do\n  z ∼ Bern(1/2, {1, 0});\n"
                      "  x := x[−1] + z;\nend\n")
    b = parse_program("x[0] := 0;\nwhile (x != 3) do\n  z ~ Bern(1/2, {1, 0});\n"
                      "  x := x[-1] + z;\nend\n")
    assert show_program(a) == show_program(b)


@pytest.mark.parametrize("text,where", [
    ("x[0] := 0;\nwhile (x < 3) do\n  x := y;\nend\n", "3:8"),
    ("x[0] := 0;\nwhile (x < 3) do\n  x := x[-2];\nend\n", "3:"),
    ("x[0] := 0;\nwhile (x < 3 do\n  x := x + 1;\nend\n", "2:"),
    ("x[0] := 0;\nwhile (x < 3) do\n  z ~ Foo(1);\n  x := x + z;\nend\n", "3:"),
    ("x[0] := 0;\nwhile (x < 3) do\n  z ~ Unif{1, 1};\n  x := x + z;\nend\n", "3:"),
])
def test_diagnostics_carry_locations(text, where):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert str(exc.value).startswith(where)


def test_bad_distribution_rejected_at_extraction():
    prog = parse_program("x[0] := 0;\nwhile (x < 3) do\n  z ~ Table{1 -> 1/2, 2 -> 1/3};\n"
                         "  x := x + z;\nend\n")
    with pytest.raises(RecurrenceError, match=r"^3:\d+: .*sum to 5/6"):
        extract_recurrences(prog)


def test_pragmas_and_flag_syntax():
    prog = parse_program((PROGRAMS / "geom.spp").read_text())
    assert show_expr(prog.pragmas.seed) == "x"
    assert [show_hint(h) for h in prog.pragmas.hints] == ["at-exit: x = t - 1"]
    assert show_variant(parse_variant("z, 2", prog)) == show_variant(prog.pragmas.variant)
    assert show_expr(parse_seed("x*x - p", prog)) == "x * x - p"
    hs = parse_hints("every: x >= 0\nat-exit: x = t - 1", prog)
    assert len(hs) == 2
    with pytest.raises(ParseError):
        parse_seed("x +", prog)
    with pytest.raises(ParseError):
        parse_hints("sometimes: x = 0", prog)
