"""Recurrence extraction, interpreter agreement and Doob decomposition."""

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from oracles import (linear_program, martingale_program, martingale_seed, mixed_program,
                     random_draws, random_seed)

from doobsynth.doob import check_martingale, conditional_step, doob_decompose, stuck_terms
from doobsynth.montecarlo import interpret
from doobsynth.parser import parse_program, parse_seed
from doobsynth.recurrence import RecurrenceError, extract_recurrences, lift_seed, unroll
from doobsynth.symbolic.expr import Index, Param, Poly, Proc, Sample, TimeVar, param
from doobsynth.symbolic.parse import parse_symexpr
from doobsynth.symbolic.rewrite import RewriteTrace

EXPECTED_M = {
    "geom": "x@i - p*i",
    "gamble": "x@i",
    "gamble2": "x@i^2 - i",
    "momentum": "x@i - x@(i-1) + x@0",
}


def synthesize(name):
    prog, rs = load(name)
    return prog, rs, doob_decompose(rs, lift_seed(rs, prog.pragmas.seed))


@pytest.mark.parametrize("name,expected", sorted(EXPECTED_M.items()))
def test_martingale_forms(name, expected):
    _, rs, mf = synthesize(name)
    assert mf.M == parse_symexpr(expected)
    assert check_martingale(rs, mf.M).holds is True


def test_abracadabra_martingale_is_sum_over_matches():
    _, rs, mf = synthesize("miniabra")
    assert check_martingale(rs, mf.M).holds is True
    assert "sum(j=1..i, 8*match3@j)" in str(mf.M)


def test_recurrence_lines():
    _, rs = load("momentum")
    assert rs.lines() == ["x@i = 2*x@(i-1) - x@(i-2) + z@i"]
    assert rs.m == 2
    _, rs = load("miniabra")
    assert "match2@i = match1@(i-1)*pi_2(s@i)" in rs.lines()


def one_step_drift(rs, increment, params, past, rng):
    """E[D_i | past] by enumerating the joint support of the current samples."""
    d = increment.subs(rs.unroll_map(Index("i", 0)))
    names = sorted(rs.dists)
    supports = [rs.dists[n].instantiate(params) for n in names]
    i = 7
    total = Fraction(0)
    for combo in itertools.product(*supports):
        pr = Fraction(1)
        draw = {}
        for n, (pt, q) in zip(names, combo):
            pr *= q
            draw[n] = pt

        def value(a):
            if isinstance(a, Param):
                return params[a.name]
            if isinstance(a, Proc):
                return past[(a.name, a.index.off)]
            if isinstance(a, Sample):
                pt = draw[a.name]
                return pt[0] if a.proj is None else pt[a.proj - 1]
            if isinstance(a, TimeVar):
                return Fraction(i)
            raise AssertionError(a)
        total += pr * d.evaluate(value)
    return total


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_synthesized_increments_have_zero_drift_numerically(seed):
    r = random.Random(seed)
    text = linear_program(r)
    prog = parse_program(text)
    rs = extract_recurrences(prog)
    mf = doob_decompose(rs, lift_seed(rs, parse_seed(random_seed(r, prog.process_vars), prog)))
    past = {(v, -k): Fraction(r.randint(-9, 9), r.randint(1, 3))
            for v in prog.process_vars for k in range(1, 4)}
    assert one_step_drift(rs, mf.increment, {}, past, r) == 0


def test_example_increments_have_zero_drift_numerically():
    r = random.Random(0)
    for name, params in [("geom", {"p": Fraction(1, 3)}),
                         ("gamble2", {"a": Fraction(3), "b": Fraction(10)}),
                         ("momentum", {"a": Fraction(3), "b": Fraction(10)}),
                         ("miniabra", {})]:
        _, rs, mf = synthesize(name)
        for _ in range(5):
            past = {(v, -k): Fraction(r.randint(0, 1)) for v in rs.program.process_vars
                    for k in range(1, 3)}
            assert one_step_drift(rs, mf.increment, params, past, r) == 0, name


def test_non_martingale_is_refuted():
    _, rs = load("geom")
    v = check_martingale(rs, parse_symexpr("x@i"))
    assert v.holds is False and v.residual == param("p")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_doob_fixed_point(seed):
    r = random.Random(seed)
    text, names = martingale_program(r)
    prog = parse_program(text)
    rs = extract_recurrences(prog)
    sp = lift_seed(rs, parse_seed(martingale_seed(r, names), prog))
    assert check_martingale(rs, sp.E).holds is True
    assert doob_decompose(rs, sp).M == sp.E


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_interpreter_matches_unrolling(seed):
    r = random.Random(seed)
    prog = parse_program(mixed_program(r))
    rs = extract_recurrences(prog)
    draws = random_draws(prog, r, 10)
    assert interpret(prog, {}, draws) == unroll(rs, {}, draws)


def test_seed_over_samples_is_rejected():
    prog, rs = load("geom")
    with pytest.raises(RecurrenceError):
        lift_seed(rs, parse_seed("x + z", prog))


def test_future_atoms_leave_conditional_expectation_stuck():
    _, rs = load("geom")
    ahead = Poly.atom(Proc("x", Index("i", 1)))
    out = conditional_step(rs, ahead, "i", RewriteTrace())
    assert stuck_terms(out)
