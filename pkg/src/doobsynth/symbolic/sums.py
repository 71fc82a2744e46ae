"""Closed forms for finite sums over a bound time index.

``simplify_sum`` splits the summand monomial by monomial:

* terms free of the bound variable contribute ``c * (hi - lo + 1)``;
* pure powers ``j^k`` (k <= 4) use Faulhaber polynomials;
* terms built from time-indexed atoms are grouped into shift classes.  A class
  ``sum_s c_s * m(j + s)`` equals ``(sum_s c_s) * sum_j m(j)`` plus finitely many
  boundary terms, so it telescopes completely whenever the coefficients cancel.

Whatever does not close is collected into a single residual sum.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Index, Poly, Proc, Sample, SumAtom, TimeVar, _mentions_sym

MAX_POWER = 4


def _faulhaber(k: int, n: Poly) -> Poly:
    """sum_{t=1}^{n} t^k as a polynomial in n (valid for every integer n)."""
    if k == 0:
        return n
    if k == 1:
        return n * (n + 1) * Fraction(1, 2)
    if k == 2:
        return n * (n + 1) * (2 * n + 1) * Fraction(1, 6)
    if k == 3:
        return (n * (n + 1)) ** 2 * Fraction(1, 4)
    if k == 4:
        return n * (n + 1) * (2 * n + 1) * (3 * n * n + 3 * n - 1) * Fraction(1, 30)
    raise ValueError(k)


def power_sum(k: int, lo: Index, hi: Index) -> Poly:
    return _faulhaber(k, hi.as_poly()) - _faulhaber(k, (lo - 1).as_poly())


def _shifted(m: Poly, var: str, s: int) -> Poly:
    return m if s == 0 else m.reindex(var, Index(var, s))


def _at(m: Poly, var: str, ix: Index) -> Poly:
    return m.reindex(var, ix)


def _range(m: Poly, var: str, lo: Index, count: int) -> Poly:
    """m(lo) + m(lo+1) + ... + m(lo+count-1)."""
    out = Poly.zero()
    for t in range(count):
        out = out + _at(m, var, lo + t)
    return out


def close_sum(a: SumAtom) -> Poly:
    var, lo, hi = a.var, a.lo, a.hi
    closed = Poly.zero()
    residual = Poly.zero()
    classes: dict = {}
    for mono, c in a.body.items():
        term = Poly({mono: c})
        tv = sum(e for at, e in mono if isinstance(at, TimeVar) and at.name == var)
        indexed = [at for at, _ in mono if isinstance(at, (Proc, Sample)) and at.index.sym == var]
        other = [at for at, _ in mono
                 if not isinstance(at, (Proc, Sample, TimeVar)) and _mentions_sym(at, var)]
        if other:
            residual = residual + term
        elif not indexed:
            coeff = Poly({tuple((at, e) for at, e in mono
                                if not (isinstance(at, TimeVar) and at.name == var)): c})
            if tv <= MAX_POWER:
                closed = closed + coeff * power_sum(tv, lo, hi)
            else:
                residual = residual + term
        elif tv:
            residual = residual + term
        else:
            s = max(at.index.off for at in indexed)
            base = _shifted(Poly({mono: Fraction(1)}), var, -s)
            classes.setdefault(base, []).append((s, c))
    for base, shifts in classes.items():
        total = sum(c for _, c in shifts)
        if total:
            residual = residual + base * total
        for s, c in shifts:
            if s < 0:
                corr = _range(base, var, lo + s, -s) - _range(base, var, hi + s + 1, -s)
            elif s > 0:
                corr = _range(base, var, hi + 1, s) - _range(base, var, lo, s)
            else:
                continue
            closed = closed + corr * c
    if not residual.is_zero():
        closed = closed + Poly.atom(SumAtom(var, lo, hi, residual))
    return closed


def simplify_sum(e: Poly) -> Poly:
    """Close every top-level sum of ``e`` as far as possible."""

    def fn(a):
        if isinstance(a, SumAtom):
            r = close_sum(a)
            return None if r == Poly.atom(a) else r
        return None

    return e.map_atoms(fn)


def peel_last(a: SumAtom) -> Poly:
    """sum_{lo}^{hi} f = sum_{lo}^{hi-1} f + f(hi)."""
    rest = SumAtom(a.var, a.lo, a.hi - 1, a.body)
    return Poly.atom(rest) + _at(a.body, a.var, a.hi)


def expand_sum(a: SumAtom, lo: int, hi: int) -> Poly:
    """Unroll a sum whose bounds are concrete integers."""
    out = Poly.zero()
    for t in range(lo, hi + 1):
        out = out + _at(a.body, a.var, Index(None, t))
    return out
