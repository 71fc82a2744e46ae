"""Finite-support distributions over integer tuples with exact moments."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from .symbolic.expr import Poly


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution:
    """``support`` is a tuple of (point, probability) with probabilities as parameter polys."""

    label: str
    arity: int
    support: tuple
    tuple_valued: bool = False
    alphabet: tuple = field(default=(), compare=False)  # Matches: (pattern, L)

    def __post_init__(self):
        seen = set()
        for pt, _ in self.support:
            if len(pt) != self.arity:
                raise DistributionError(f"{self.label}: point {pt} has wrong arity")
            if pt in seen:
                raise DistributionError(f"{self.label}: duplicate support point {pt}")
            seen.add(pt)
        total = sum((pr for _, pr in self.support), Poly.zero())
        if total != Poly.one():
            raise DistributionError(f"{self.label}: probabilities sum to {total}, not 1")

    def __str__(self):
        return self.label

    def probabilities(self) -> list[Poly]:
        return [pr for _, pr in self.support]

    def params(self) -> set[str]:
        return {a.name for pr in self.probabilities() for a in pr.atoms()}

    def instantiate(self, values: Mapping[str, Fraction]) -> list[tuple[tuple, Fraction]]:
        """Concrete support at the given parameter values, dropping zero-mass points."""
        out = []
        for pt, pr in self.support:
            q = pr.evaluate(lambda a: values[a.name])
            if q < 0 or q > 1:
                raise DistributionError(f"{self.label}: probability {pr} = {q} outside [0,1]")
            if q:
                out.append((pt, q))
        return out


def _merge(points) -> tuple:
    acc: dict = {}
    for pt, pr in points:
        acc[pt] = acc.get(pt, Poly.zero()) + Poly.lift(pr)
    return tuple((pt, pr) for pt, pr in acc.items() if not pr.is_zero())


def bern(p: Poly, v1: int, v0: int) -> Distribution:
    p = Poly.lift(p)
    label = f"Bern({p}, {{{v1}, {v0}}})"
    return Distribution(label, 1, _merge([((v1,), p), ((v0,), 1 - p)]))


def unif(values) -> Distribution:
    vals = sorted(set(values))
    if not vals:
        raise DistributionError("Unif over an empty set")
    w = Fraction(1, len(vals))
    label = "Unif{" + ", ".join(map(str, vals)) + "}"
    return Distribution(label, 1, tuple(((v,), Poly.const(w)) for v in vals))


def table(rows) -> Distribution:
    rows = [(tuple(pt), Poly.lift(pr)) for pt, pr in rows]
    if not rows:
        raise DistributionError("empty table")
    arity = len(rows[0][0])
    body = ", ".join(f"({', '.join(map(str, pt))}) -> {pr}" for pt, pr in rows)
    return Distribution(f"Table{{{body}}}", arity, _merge(rows), tuple_valued=True)


def matches(pattern: str, L: Poly | int) -> Distribution:
    """Uniform letter from an alphabet of size L, reported as match indicators.

    Coordinate k is 1 iff the drawn letter equals ``pattern[k-1]``.  Letters
    absent from the pattern all map to the zero tuple, so the support holds one
    point per distinct pattern letter plus the zero tuple.
    """
    if not pattern:
        raise DistributionError("Matches needs a non-empty pattern")
    L = Poly.lift(L)
    letters = sorted(set(pattern), key=pattern.index)
    n = len(pattern)
    if L.is_const():
        size = L.const_value()
        if size.denominator != 1 or size < len(letters):
            raise DistributionError(f"alphabet size {size} smaller than the {len(letters)} "
                                    f"letters of {pattern!r}")
        inv = Poly.const(Fraction(1) / size)
    else:
        if not L.is_monomial() or L.single_atom() is None:
            raise DistributionError("alphabet size must be an integer or a parameter")
        inv = L ** -1
    pts = [(tuple(int(ch == c) for ch in pattern), inv) for c in letters]
    rest = 1 - inv * len(letters)
    pts.append(((0,) * n, rest))
    return Distribution(f'Matches("{pattern}", {L})', n, _merge(pts), tuple_valued=True,
                        alphabet=(pattern, L))


def moment(d: Distribution, powers: Mapping[int, int]) -> Poly:
    """E[prod_c pi_c(X)^powers[c]] with 1-based coordinates."""
    key = tuple(sorted((c, k) for c, k in powers.items() if k))
    for c, _ in key:
        if not 1 <= c <= d.arity:
            raise DistributionError(f"coordinate {c} outside arity {d.arity} of {d}")
    return _moment(d, key)


@lru_cache(maxsize=4096)
def _moment(d: Distribution, key: tuple) -> Poly:
    out = Poly.zero()
    for pt, pr in d.support:
        v = Fraction(1)
        for c, k in key:
            v *= Fraction(pt[c - 1]) ** k
        if v:
            out = out + pr * v
    return out


def support_interval(d: Distribution, coord: int = 1) -> tuple[int, int]:
    vals = [pt[coord - 1] for pt, _ in d.support]
    return min(vals), max(vals)


def decrease_probability(d: Distribution, event) -> Poly:
    """Total probability of support points satisfying ``event(point)``."""
    return sum((pr for pt, pr in d.support if event(pt)), Poly.zero())


__all__ = ["Distribution", "DistributionError", "bern", "unif", "table", "matches",
           "moment", "support_interval", "decrease_probability"]
