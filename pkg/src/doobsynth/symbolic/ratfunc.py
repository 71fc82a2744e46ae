"""Rational functions of parameters, used for solved closed forms."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Mapping

from .expr import Number, Param, Poly, SymbolicError, format_params


def _dense(p: Poly, names: list[str]) -> dict:
    out = {}
    for m, c in p.items():
        exps = dict((a.name, e) for a, e in m)
        out[tuple(exps.get(n, 0) for n in names)] = c
    return out


def _sparse(d: Mapping, names: list[str]) -> Poly:
    terms = {}
    for exps, c in d.items():
        mono = tuple(sorted(((Param(n), e) for n, e in zip(names, exps) if e),
                            key=lambda t: t[0].sort_key))
        terms[mono] = terms.get(mono, 0) + c
    return Poly(terms)


def exact_divide(num: Poly, den: Poly) -> Poly | None:
    """``num / den`` if ``den`` divides ``num`` exactly, else None."""
    if den.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    names = sorted({a.name for p in (num, den) for a in p.atoms()})
    r = _dense(num, names)
    d = _dense(den, names)
    lead = max(d)
    lc = d[lead]
    q: dict = {}
    while r:
        top = max(r)
        if any(t < l for t, l in zip(top, lead)):
            return None
        shift = tuple(t - l for t, l in zip(top, lead))
        c = r[top] / lc
        q[shift] = q.get(shift, 0) + c
        for e, v in d.items():
            k = tuple(a + b for a, b in zip(e, shift))
            nv = r.get(k, 0) - c * v
            if nv:
                r[k] = nv
            else:
                r.pop(k, None)
    return _sparse(q, names)


class RatFunc:
    """Canonical ``num / den`` with polynomial numerator and denominator.

    Negative parameter powers are cleared, common monomial factors removed, the
    denominator is scaled to coprime integer coefficients with a positive first
    term, and exact polynomial division is attempted.  Equality is decided by
    cross-multiplication, so it does not depend on full gcd cancellation.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.one()
        if not num.is_params_only() or not den.is_params_only():
            raise SymbolicError("rational functions range over parameters only")
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num, self.den = _canonical(num, den)

    @staticmethod
    def lift(x) -> RatFunc:
        if isinstance(x, RatFunc):
            return x
        return RatFunc(Poly.lift(x))

    def is_poly(self) -> bool:
        return self.den == Poly.one()

    def as_poly(self) -> Poly:
        """Return a (Laurent) polynomial when the denominator is a monomial."""
        if self.den.is_monomial():
            return self.num / self.den
        raise SymbolicError(f"{self} is not a polynomial")

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other) -> RatFunc:
        o = RatFunc.lift(other)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> RatFunc:
        return RatFunc(-self.num, self.den)

    def __sub__(self, other) -> RatFunc:
        return self + (-RatFunc.lift(other))

    def __rsub__(self, other) -> RatFunc:
        return RatFunc.lift(other) - self

    def __mul__(self, other) -> RatFunc:
        o = RatFunc.lift(other)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> RatFunc:
        o = RatFunc.lift(other)
        if o.is_zero():
            raise ZeroDivisionError(f"division of {self} by zero")
        return RatFunc(self.num * o.den, self.den * o.num)

    def __pow__(self, n: int) -> RatFunc:
        if n < 0:
            return RatFunc(Poly.one()) / self ** (-n)
        out = RatFunc(Poly.one())
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Poly)):
            other = RatFunc.lift(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num * other.den == other.num * self.den

    __hash__ = None

    def evaluate(self, values: Mapping[str, Number]) -> Fraction:
        def val(a):
            return values[a.name]

        d = self.den.evaluate(val)
        if d == 0:
            raise ZeroDivisionError(f"denominator of {self} vanishes")
        return self.num.evaluate(val) / d

    def __str__(self) -> str:
        n = format_params(self.num)
        if self.den == Poly.one():
            return n
        d = format_params(self.den)
        if len(self.num) > 1:
            n = f"({n})"
        if len(self.den) > 1 or not self.den.single_atom():
            d = f"({d})" if len(self.den) > 1 or "*" in d else d
        return f"{n}/{d}"

    def __repr__(self) -> str:
        return f"RatFunc({self})"


def _canonical(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.is_zero():
        return Poly.zero(), Poly.one()
    # clear negative exponents and common monomial content
    mins: dict = {}
    for p in (num, den):
        for m, _ in p.items():
            present = {a: e for a, e in m}
            for a in {a for q in (num, den) for a in q.atoms()}:
                e = present.get(a, 0)
                mins[a] = min(mins.get(a, e), e)
    shift = {a: -e for a, e in mins.items() if e}
    if shift:
        mono = Poly.one()
        for a, e in shift.items():
            mono = mono * Poly.atom(a, e)
        num, den = num * mono, den * mono
    q = exact_divide(num, den)
    if q is not None:
        return q, Poly.one()
    # integer, coprime denominator coefficients with positive first term
    coeffs = [c for _, c in den.items()]
    scale = Fraction(lcm(*(c.denominator for c in coeffs)), gcd(*(c.numerator for c in coeffs)))
    first = sorted(den.items(), key=lambda t: (sum(e for _, e in t[0]),
                                               tuple((a.sort_key, e) for a, e in t[0])))[0][1]
    if first * scale < 0:
        scale = -scale
    return num * scale, den * scale
