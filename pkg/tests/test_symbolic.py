"""Polynomial kernel: ring laws, evaluation homomorphism, printing round trip."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from doobsynth.symbolic.expr import (Expect, Index, Indicator, Param, Poly, Proc, Rel,
                                     SumAtom, SymbolicError, TimeVar, const, param, proc,
                                     sample)
from doobsynth.symbolic.parse import parse_closed_form, parse_symexpr
from doobsynth.symbolic.ratfunc import RatFunc

ATOMS = [proc("x"), proc("x", off=-1), proc("y"), param("p"), param("a"),
         sample("z"), Poly.atom(TimeVar("i"))]

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polys(draw, max_terms=4):
    out = Poly.zero()
    for _ in range(draw(st.integers(0, max_terms))):
        mono = const(draw(small))
        for _ in range(draw(st.integers(0, 3))):
            mono = mono * draw(st.sampled_from(ATOMS))
        out = out + mono
    return out


def env(seed):
    vals = {}

    def value(a):
        key = str(a)
        if key not in vals:
            vals[key] = Fraction((hash(key) ^ seed) % 11 - 5, 1 + (seed % 3))
        return vals[key]
    return value


@given(polys(), polys(), polys())
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Poly.zero()


@given(polys(), polys(), st.integers(0, 1000))
def test_evaluation_is_a_homomorphism(a, b, seed):
    v = env(seed)
    assert (a + b).evaluate(v) == a.evaluate(v) + b.evaluate(v)
    assert (a * b).evaluate(v) == a.evaluate(v) * b.evaluate(v)


@given(polys(), st.integers(0, 3))
def test_power_matches_repeated_product(a, n):
    prod = Poly.one()
    for _ in range(n):
        prod = prod * a
    assert a ** n == prod


@settings(max_examples=200)
@given(polys())
def test_print_parse_round_trip(a):
    assert parse_symexpr(str(a), samples={"z"}) == a


def test_compound_atoms_round_trip():
    body = proc("x", "tau") * proc("x", "tau") - Poly.atom(TimeVar("tau"))
    cases = [
        Poly.atom(Expect(body)),
        Poly.atom(Expect(Poly.atom(Indicator(Rel("=", proc("x", "tau") - param("b")))))),
        Poly.atom(SumAtom("j", Index(None, 1), Index("i", 0), proc("x", "j") * param("p"))),
        proc("x", "tau", -1) + proc("x", None, 0),
    ]
    for p in cases:
        assert parse_symexpr(str(p)) == p


def test_printer_is_canonical():
    a = proc("x") * 2 - param("p") * Poly.atom(TimeVar("i"))
    b = -(param("p") * Poly.atom(TimeVar("i"))) + proc("x") + proc("x")
    assert a == b and str(a) == str(b) == "2*x@i - p*i"


def test_laurent_params_and_division():
    b = param("b")
    assert (param("a") / b) * b == param("a")
    with pytest.raises(SymbolicError):
        proc("x") / proc("y")


def test_reindex_and_subs():
    p = proc("x") - proc("x", off=-1)
    assert p.reindex("i", Index("tau", 0)) == proc("x", "tau") - proc("x", "tau", -1)
    got = p.subs({Proc("x", Index("i", -1)): const(3)})
    assert got == proc("x") - 3


def test_ratfunc_canonical_form():
    r = parse_closed_form("(a*b - a^2)/(b - a)")
    assert r == RatFunc(param("a"))
    one_minus_p = RatFunc(1 - param("p"))
    q = RatFunc(Poly.one()) / one_minus_p
    assert str(q) == "1/(1 - p)"
    assert q.evaluate({"p": Fraction(1, 2)}) == 2


@given(st.integers(-4, 4), st.integers(1, 5), st.integers(1, 5))
def test_ratfunc_evaluation_agrees_with_fractions(a, b, c):
    r = RatFunc(param("a") + b) / RatFunc(param("c") ** 2 + c)
    vals = {"a": Fraction(a), "c": Fraction(c)}
    assert r.evaluate(vals) == Fraction(a + b, c * c + c)
