"""Interval arithmetic soundness, parameter sign oracle and loop invariants."""

from fractions import Fraction

from hypothesis import assume, given, strategies as st

from conftest import load

from doobsynth.intervals import (Interval, Num, ParamContext, eval_interval, loop_invariant)
from doobsynth.symbolic.expr import param, proc
from doobsynth.symbolic.parse import parse_symexpr

fr = st.fractions(min_value=-6, max_value=6, max_denominator=5)


@st.composite
def nums(draw):
    a, b = sorted((draw(fr), draw(fr)))
    return Num(a, b), [a, b, (a + b) / 2]


def contains(n: Num, v) -> bool:
    return (n.lo is None or n.lo <= v) and (n.hi is None or v <= n.hi)


@given(nums(), nums())
def test_num_sum_and_product_are_sound(x, y):
    (nx, px), (ny, py) = x, y
    for a in px:
        for b in py:
            assert contains(nx + ny, a + b)
            assert contains(nx * ny, a * b)


@given(nums(), st.integers(0, 5), fr)
def test_num_power_and_scale_are_sound(x, n, c):
    nx, px = x
    for a in px:
        assert contains(nx.power(n), a ** n)
        assert contains(nx.scale(c), a * c)


@given(nums(), st.integers(1, 3))
def test_num_negative_power_on_positive_interval(x, n):
    nx, px = x
    assume(nx.positive())
    for a in px:
        assert contains(nx.power(-n), Fraction(1) / a ** n)


def test_unbounded_product():
    top = Num(None, None)
    assert (Num.point(0) * top) == Num.point(0)
    assert (Num(Fraction(1), None) * Num(Fraction(2), Fraction(3))).lo == 2


def test_param_context_signs_gambler():
    prog, _ = load("gamble2")
    ctx = ParamContext(prog)
    a, b = param("a"), param("b")
    assert ctx.positive(b - a)
    assert ctx.positive(b - 1)
    assert ctx.nonneg(a * b - a * a)
    assert ctx.le(a, b) is True
    assert not ctx.positive(a - 2) and not ctx.negative(a - 2)


def test_param_context_signs_geometric():
    prog, _ = load("geom")
    ctx = ParamContext(prog)
    p = param("p")
    assert ctx.positive(1 - p) and ctx.positive(p)
    assert ctx.nonzero(1 - p)
    assert not ctx.positive(p - parse_symexpr("1/2"))


def test_eval_interval_uses_symbolic_ranges():
    prog, _ = load("gamble")
    ctx = ParamContext(prog)
    rng = {"x": Interval(parse_symexpr("0"), param("b"))}
    out = eval_interval(proc("x") * proc("x"), lambda at: rng[at.name], ctx)
    assert out.lo == parse_symexpr("0") and out.hi == param("b") ** 2


def test_loop_invariant_gambler():
    prog, rs = load("gamble")
    st_ = loop_invariant(rs, ParamContext(prog))
    assert str(st_.procs["x"]) == "[0, b]"


def test_loop_invariant_pattern_matching():
    prog, rs = load("fullabra")
    st_ = loop_invariant(rs, ParamContext(prog))
    for k in range(12):
        assert str(st_.procs[f"match{k}"]) in ("[0, 1]", "[1, 1]"), k


def test_loop_invariant_unbounded_walk():
    prog, rs = load("geom")
    st_ = loop_invariant(rs, ParamContext(prog))
    x = st_.procs["x"]
    assert x.lo is not None and x.lo.is_zero() and x.hi is None
