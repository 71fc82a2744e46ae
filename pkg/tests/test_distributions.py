"""Distribution catalog: construction checks and moments against brute force."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import brute_moment, matches_points, multi_indices

from doobsynth import distributions as D
from doobsynth.symbolic.expr import param

P_VALUES = [Fraction(1, 3), Fraction(1, 2), Fraction(5, 7)]


def at(poly, **vals):
    return poly.evaluate(lambda a: Fraction(vals[a.name]))


@pytest.mark.parametrize("v1,v0", [(1, 0), (-1, 1), (3, -2), (0, 5)])
def test_bern_moments(v1, v0):
    d = D.bern(param("p"), v1, v0)
    for k in range(7):
        m = D.moment(d, {1: k})
        for p in P_VALUES:
            assert at(m, p=p) == brute_moment([((v1,), p), ((v0,), 1 - p)], {1: k})


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=6, unique=True), st.integers(0, 6))
def test_unif_moments(values, k):
    d = D.unif(values)
    pts = [((v,), Fraction(1, len(values))) for v in values]
    assert D.moment(d, {1: k}).const_value() == brute_moment(pts, {1: k})


def test_table_correlations():
    rows = [((1, 0), Fraction(1, 3)), ((0, 2), Fraction(1, 2)), ((-1, -1), Fraction(1, 6))]
    d = D.table(rows)
    for powers in multi_indices(2, 6):
        assert D.moment(d, powers).const_value() == brute_moment(rows, powers)


@pytest.mark.parametrize("pattern", ["111", "ABRA", "ABRACADABRA"])
def test_matches_symbolic_alphabet(pattern):
    d = D.matches(pattern, param("L"))
    degree = 6 if len(pattern) <= 4 else 2
    for powers in multi_indices(len(pattern), degree):
        m = D.moment(d, powers)
        for L in (len(set(pattern)), 7, 26):
            assert at(m, L=L) == brute_moment(matches_points(pattern, L), powers)


def test_matches_concrete_alphabet():
    d = D.matches("111", 2)
    assert D.moment(d, {1: 1}).const_value() == Fraction(1, 2)
    assert D.moment(d, {1: 1, 2: 1, 3: 1}).const_value() == Fraction(1, 2)
    with pytest.raises(D.DistributionError):
        D.matches("ABC", 2)


def test_invalid_distributions():
    with pytest.raises(D.DistributionError):
        D.table([((1,), Fraction(1, 2)), ((2,), Fraction(1, 3))])
    with pytest.raises(D.DistributionError):
        D.unif([])
    with pytest.raises(D.DistributionError):
        D.moment(D.bern(Fraction(1, 2), 1, 0), {2: 1})


def test_instantiate_rejects_bad_probability():
    d = D.bern(param("p"), 1, 0)
    with pytest.raises(D.DistributionError):
        d.instantiate({"p": Fraction(3, 2)})
    assert d.instantiate({"p": Fraction(1)}) == [((1,), Fraction(1))]
