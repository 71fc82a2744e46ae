"""Interval reasoning over parameter-valued bounds.

Two layers:

* :class:`ParamContext` decides signs of parameter polynomials under the
  declared parameter constraints (numeric interval evaluation, then a
  shift-by-lower-bound argument: substitute ``q = lo + u`` with ``u >= 0`` and
  check that every coefficient is non-negative).
* :class:`Interval` has parameter-polynomial endpoints (``None`` is infinite)
  and supports the arithmetic needed to bound program expressions.
  :func:`loop_invariant` computes loop-head ranges for every state variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Mapping

from .recurrence import RecurrenceSystem, lower, lower_guard, lower_params
from .symbolic.expr import (And, Atom, Formula, Index, Param, Poly, Proc, Rel, Sample, TimeVar,
                            Truth)
from .syntax import Program

INF = None


# numeric intervals ----------------------------------------------------------

@dataclass(frozen=True)
class Num:
    """Real interval with optional infinite and open endpoints."""

    lo: Fraction | None
    hi: Fraction | None
    lo_open: bool = False
    hi_open: bool = False

    @staticmethod
    def point(v) -> Num:
        v = Fraction(v)
        return Num(v, v)

    def __add__(self, o: Num) -> Num:
        lo = None if self.lo is None or o.lo is None else self.lo + o.lo
        hi = None if self.hi is None or o.hi is None else self.hi + o.hi
        return Num(lo, hi, self.lo_open or o.lo_open, self.hi_open or o.hi_open)

    def scale(self, c: Fraction) -> Num:
        if c == 0:
            return Num.point(0)
        lo = None if self.lo is None else self.lo * c
        hi = None if self.hi is None else self.hi * c
        if c > 0:
            return Num(lo, hi, self.lo_open, self.hi_open)
        return Num(hi, lo, self.hi_open, self.lo_open)

    def __mul__(self, o: Num) -> Num:
        best_lo = best_hi = None
        for a, ao in self._ends(-1):
            for b, bo in o._ends(-1):
                v = 0 if a == 0 or b == 0 else a * b
                op = (ao or bo) and v != 0 or (v == 0 and (a == 0 and ao or b == 0 and bo))
                if best_lo is None or (v, op) < best_lo:
                    best_lo = (v, op)
                if best_hi is None or (v, not op) > (best_hi[0], not best_hi[1]):
                    best_hi = (v, op)
        return Num(_fin(best_lo[0]), _fin(best_hi[0]), bool(best_lo[1]), bool(best_hi[1]))

    def _ends(self, _):
        lo = -math.inf if self.lo is None else self.lo
        hi = math.inf if self.hi is None else self.hi
        return ((lo, self.lo_open), (hi, self.hi_open))

    def power(self, n: int) -> Num:
        if n == 0:
            return Num.point(1)
        if n < 0:
            if self.lo is not None and (self.lo > 0 or (self.lo == 0 and self.lo_open)):
                lo = Fraction(0) if self.hi is None else 1 / self.hi
                hi = None if self.lo == 0 else 1 / self.lo
                inv = Num(lo, hi, self.hi is None or self.hi_open, self.lo_open)
                return inv.power(-n)
            return Num(None, None)
        out = Num.point(1)
        if n % 2 == 0 and not self.nonneg():
            # |x|^n on a sign-changing or negative interval
            a = self.scale(Fraction(-1)) if self.nonpos() else None
            if a is not None:
                return a.power(n)
            m = max(abs(v) if v is not None else math.inf for v in (self.lo, self.hi))
            hi = None if m == math.inf else Fraction(m) ** n
            return Num(Fraction(0), hi)
        for _ in range(n):
            out = out * self
        return out

    def nonneg(self) -> bool:
        return self.lo is not None and self.lo >= 0

    def nonpos(self) -> bool:
        return self.hi is not None and self.hi <= 0

    def positive(self) -> bool:
        return self.lo is not None and (self.lo > 0 or (self.lo == 0 and self.lo_open))

    def negative(self) -> bool:
        return self.hi is not None and (self.hi < 0 or (self.hi == 0 and self.hi_open))


def _fin(v):
    return None if v in (math.inf, -math.inf) else Fraction(v)


# parameter context ------------------------------------------------------------

@dataclass
class ParamInfo:
    name: str
    integral: bool
    num: Num
    link: tuple | None = None  # (other param, offset c, open) meaning name < other + c


class ParamContext:
    """Sign oracle for parameter polynomials under the declared constraints."""

    def __init__(self, program: Program | None = None, extra: Mapping[str, Num] | None = None):
        self.info: dict[str, ParamInfo] = {}
        if program is not None:
            for d in program.params:
                self._declare(d)
        for name, iv in (extra or {}).items():
            self.info[name] = ParamInfo(name, False, iv)

    def _declare(self, d) -> None:
        lo = hi = None
        lo_open = hi_open = True
        link = None
        if d.lo is not None:
            b = self.eval_num(lower_params(d.lo))
            lo, lo_open = b.lo, (b.lo_open or not d.lo_closed)
        if d.hi is not None:
            h = lower_params(d.hi)
            b = self.eval_num(h)
            hi, hi_open = b.hi, (b.hi_open or not d.hi_closed)
            hp = h.as_poly() if h.den == Poly.one() else None
            if hp is not None:
                params = [a for a in hp.atoms()]
                if len(params) == 1 and hp - Poly.atom(params[0]) == Poly.const(
                        hp.constant_term()) and hp.terms.get(((params[0], 1),)) == 1:
                    link = (params[0].name, hp.constant_term(), not d.hi_closed)
        if d.integral:
            if lo is not None:
                lo = Fraction(math.floor(lo) + 1) if lo_open and lo == int(lo) else Fraction(
                    math.ceil(lo))
                lo_open = False
            if hi is not None:
                hi = Fraction(math.ceil(hi) - 1) if hi_open and hi == int(hi) else Fraction(
                    math.floor(hi))
                hi_open = False
        self.info[d.name] = ParamInfo(d.name, d.integral, Num(lo, hi, lo_open, hi_open), link)

    # numeric evaluation ----------------------------------------------------
    def atom_num(self, a: Atom) -> Num:
        if isinstance(a, Param) and a.name in self.info:
            return self.info[a.name].num
        return Num(None, None)

    def eval_num(self, p, atom_num: Callable[[Atom], Num] | None = None) -> Num:
        from .symbolic.ratfunc import RatFunc
        if isinstance(p, RatFunc):
            n, d = self.eval_num(p.num, atom_num), self.eval_num(p.den, atom_num)
            if d.positive():
                return n * d.power(-1)
            return Num(None, None)
        atom_num = atom_num or self.atom_num
        total = Num.point(0)
        for mono, c in p.items():
            t = Num.point(1)
            for a, e in mono:
                t = t * atom_num(a).power(e)
            total = total + t.scale(c)
        return total

    # sign decisions --------------------------------------------------------
    def positive(self, p: Poly) -> bool:
        if p.is_const():
            return p.const_value() > 0
        if self.eval_num(p).positive():
            return True
        return self._shift_check(p, strict=True)

    def nonneg(self, p: Poly) -> bool:
        if p.is_const():
            return p.const_value() >= 0
        if self.eval_num(p).nonneg():
            return True
        return self._shift_check(p, strict=False)

    def negative(self, p: Poly) -> bool:
        return self.positive(-p)

    def nonpos(self, p: Poly) -> bool:
        return self.nonneg(-p)

    def nonzero(self, p: Poly) -> bool:
        return self.positive(p) or self.negative(p)

    def le(self, a: Poly, b: Poly) -> bool | None:
        """a <= b decided: True, False, or None when unknown."""
        if self.nonneg(b - a):
            return True
        if self.positive(a - b):
            return False
        return None

    def _shift_check(self, p: Poly, strict: bool) -> bool:
        if not p.is_params_only():
            return False
        # clear negative exponents with positive parameters
        clear = Poly.one()
        for a in p.atoms():
            lowest = min((e for m, _ in p.items() for b, e in m if b == a), default=0)
            if lowest < 0:
                if not self.atom_num(a).positive():
                    return False
                clear = clear * Poly.atom(a, -lowest)
        q = p * clear
        names = {a.name for a in q.atoms()}
        subst: dict = {}
        linked = set()
        for n in sorted(names):
            inf = self.info.get(n)
            if inf and inf.link and inf.link[0] in names and inf.link[0] not in linked \
                    and inf.link[0] != n:
                other, c, op = inf.link
                delta = 1 if (op and inf.integral and self.info[other].integral) else 0
                subst[Param(other)] = (Poly.atom(Param(n)) - c + delta
                                       + Poly.atom(Param(f"_w_{other}")))
                linked.add(other)
        q = q.subs(subst) if subst else q
        shift: dict = {}
        for a in q.atoms():
            if a.name.startswith("_w_"):
                continue
            inf = self.info.get(a.name)
            if inf is None or inf.num.lo is None:
                return False
            shift[a] = Poly.const(inf.num.lo) + Poly.atom(Param(f"_u_{a.name}"))
        q = q.subs(shift)
        if any(c < 0 for _, c in q.items()):
            return False
        c0 = q.constant_term()
        return c0 > 0 if strict else c0 >= 0


# symbolic intervals -------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: Poly | None
    hi: Poly | None

    @staticmethod
    def point(p) -> Interval:
        p = Poly.lift(p)
        return Interval(p, p)

    @staticmethod
    def top() -> Interval:
        return Interval(None, None)

    def finite(self) -> bool:
        return self.lo is not None and self.hi is not None

    def __str__(self):
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "inf" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"


def _add_end(a, b):
    return None if a is None or b is None else a + b


def iadd(x: Interval, y: Interval) -> Interval:
    return Interval(_add_end(x.lo, y.lo), _add_end(x.hi, y.hi))


def iscale(x: Interval, c: Poly, ctx: ParamContext) -> Interval:
    """Multiply by a parameter polynomial of known sign."""
    if c.is_zero():
        return Interval.point(0)
    mul = (lambda e: None if e is None else e * c)
    if ctx.nonneg(c):
        return Interval(mul(x.lo), mul(x.hi))
    if ctx.nonpos(c):
        return Interval(mul(x.hi), mul(x.lo))
    return Interval.top()


def imin(a, b, ctx) -> Poly | None:
    if a is None or b is None:
        return None
    r = ctx.le(a, b)
    if r is None:
        return None
    return a if r else b


def imax(a, b, ctx) -> Poly | None:
    if a is None or b is None:
        return None
    r = ctx.le(a, b)
    if r is None:
        return None
    return b if r else a


def imul(x: Interval, y: Interval, ctx: ParamContext) -> Interval:
    if x.lo is not None and x.lo == x.hi:
        return iscale(y, x.lo, ctx)
    if y.lo is not None and y.lo == y.hi:
        return iscale(x, y.lo, ctx)
    xs, ys = _sign(x, ctx), _sign(y, ctx)
    if xs == ys == 1:
        return Interval(x.lo * y.lo, _mul_end(x.hi, y.hi))
    if xs == 1 and ys == -1:
        return Interval(_mul_end(x.hi, y.lo), x.lo * y.hi)
    if xs == -1 and ys == 1:
        return imul(y, x, ctx)
    if xs == ys == -1:
        return Interval(x.hi * y.hi, _mul_end(x.lo, y.lo))
    if not (x.finite() and y.finite()):
        return Interval.top()
    cands = [a * b for a in (x.lo, x.hi) for b in (y.lo, y.hi)]
    lo = hi = cands[0]
    for c in cands[1:]:
        lo = imin(lo, c, ctx)
        hi = imax(hi, c, ctx)
    return Interval(lo, hi)


def _mul_end(a, b):
    return None if a is None or b is None else a * b


def _sign(x: Interval, ctx: ParamContext) -> int:
    if x.lo is not None and ctx.nonneg(x.lo):
        return 1
    if x.hi is not None and ctx.nonpos(x.hi):
        return -1
    return 0


def ipow(x: Interval, n: int, ctx: ParamContext) -> Interval:
    if n == 0:
        return Interval.point(1)
    s = _sign(x, ctx)
    if s == 1:
        return Interval(x.lo ** n, None if x.hi is None else x.hi ** n)
    if s == -1:
        if n % 2 == 0:
            return Interval(x.hi ** n, None if x.lo is None else x.lo ** n)
        return Interval(None if x.lo is None else x.lo ** n, x.hi ** n)
    if n % 2 == 0:
        if not x.finite():
            return Interval(Poly.zero(), None)
        return Interval(Poly.zero(), imax(x.lo ** n, x.hi ** n, ctx))
    out = x
    for _ in range(n - 1):
        out = imul(out, x, ctx)
    return out


def join(x: Interval, y: Interval, ctx: ParamContext) -> Interval:
    return Interval(imin(x.lo, y.lo, ctx), imax(x.hi, y.hi, ctx))


def meet(x: Interval, y: Interval, ctx: ParamContext) -> Interval:
    def lo(a, b):
        if a is None:
            return b
        if b is None:
            return a
        r = ctx.le(a, b)
        return (b if r else a) if r is not None else b

    def hi(a, b):
        if a is None:
            return b
        if b is None:
            return a
        r = ctx.le(a, b)
        return (a if r else b) if r is not None else b

    return Interval(lo(x.lo, y.lo), hi(x.hi, y.hi))


def leq(x: Interval, y: Interval, ctx: ParamContext) -> bool:
    """x is contained in y."""
    lo_ok = y.lo is None or (x.lo is not None and ctx.le(y.lo, x.lo) is True)
    hi_ok = y.hi is None or (x.hi is not None and ctx.le(x.hi, y.hi) is True)
    return lo_ok and hi_ok


def eval_interval(p: Poly, ranges: Callable[[Atom], Interval], ctx: ParamContext) -> Interval:
    """Interval of a polynomial, atoms bounded by ``ranges`` (parameters are exact)."""
    total = Interval.point(0)
    for mono, c in p.items():
        coeff = Poly.const(c)
        t = None
        for a, e in mono:
            if isinstance(a, Param):
                coeff = coeff * Poly.atom(a, e)
                continue
            f = ipow(ranges(a), e, ctx)
            t = f if t is None else imul(t, f, ctx)
        term = Interval.point(coeff) if t is None else iscale(t, coeff, ctx)
        total = iadd(total, term)
    return total


def abs_bound(x: Interval, ctx: ParamContext) -> Poly | None:
    """A parameter polynomial C with |v| <= C on the interval."""
    if not x.finite():
        return None
    if ctx.nonneg(x.lo):
        return x.hi
    if ctx.nonpos(x.hi):
        return -x.lo
    m = imax(-x.lo, x.hi, ctx)
    return m if m is not None else x.hi - x.lo


# loop-head invariant --------------------------------------------------------------

HEAD = Index("h", 0)  # the state at the loop head: X_{i-1}, last samples


@dataclass
class StateRanges:
    """Loop-head ranges of process variables (all lags) and last sample values."""

    procs: dict
    samples: dict
    integral: set

    def of(self, a: Atom, guarded: Mapping | None = None) -> Interval:
        g = guarded or {}
        if isinstance(a, Proc):
            key = a.name
            if a.index == HEAD and key in g:
                return g[key]
            return self.procs.get(key, Interval.top())
        if isinstance(a, Sample):
            key = (a.name, a.proj)
            if a.index == HEAD and key in g:
                return g[key]
            return self.samples.get(key, Interval.top())
        return Interval.top()


def integral_vars(rs: RecurrenceSystem) -> set:
    """Process variables that provably hold integers."""
    prog = rs.program
    ints = {d.name for d in prog.params if d.integral}

    def int_poly(p: Poly, known: set) -> bool:
        for mono, c in p.items():
            if c.denominator != 1:
                return False
            for a, e in mono:
                if e < 0:
                    return False
                if isinstance(a, Param) and a.name not in ints:
                    return False
                if isinstance(a, Proc) and a.name not in known:
                    return False
        return True

    cand = set(prog.process_vars)
    changed = True
    while changed:
        changed = False
        for v in list(cand):
            inits = [rs.init[(v, k)] for k in range(rs.m)]
            ok = all(int_poly(p, cand) for p in inits)
            if ok and v in rs.updates:
                ok = int_poly(rs.updates[v], cand)
            if not ok:
                cand.discard(v)
                changed = True
    return cand


def guard_formula(rs: RecurrenceSystem, ix: Index = HEAD) -> Formula:
    def proc(name, off):
        if name in rs.constants:
            return rs.constants[name]
        return Poly.atom(Proc(name, ix + off))

    def sample(name, proj):
        return Poly.atom(Sample(name, ix, proj))

    return lower_guard(rs.program.guard, proc=proc, sample=sample)


def _conjuncts(f: Formula) -> list:
    if isinstance(f, And):
        out = []
        for g in f.items:
            out += _conjuncts(g)
        return out
    return [f]


def refine(ranges: Mapping, f: Formula, ints: set, ctx: ParamContext) -> dict:
    """Meet per-atom ranges with the bounds a formula imposes on single atoms."""
    out = dict(ranges)
    for r in _conjuncts(f):
        if not isinstance(r, Rel):
            continue
        var_part, const_part = r.poly.split_constant_part()
        if len(var_part) != 1:
            continue
        (mono, c), = var_part.items()
        if len(mono) != 1 or mono[0][1] != 1 or c not in (1, -1):
            continue
        a = mono[0][0]
        key = _key(a)
        if key not in out:
            continue
        integral = (a.name in ints) if isinstance(a, Proc) else True
        # c*a + k op 0
        bound = -const_part * c
        cur = out[key]
        strict = 1 if integral else 0
        if r.op == "=":
            new = Interval(bound, bound)
        elif r.op == "!=":
            if cur.lo is not None and cur.lo == bound and integral:
                new = Interval(bound + 1, None)
            elif cur.hi is not None and cur.hi == bound and integral:
                new = Interval(None, bound - 1)
            else:
                continue
        elif (r.op == "<" and c > 0) or (r.op == "<=" and c > 0):
            new = Interval(None, bound - (strict if r.op == "<" else 0))
        else:
            new = Interval(bound + (strict if r.op == "<" else 0), None)
        out[key] = meet(cur, new, ctx)
    return out


def _key(a: Atom):
    if isinstance(a, Proc) and a.index == HEAD:
        return a.name
    if isinstance(a, Sample) and a.index == HEAD:
        return (a.name, a.proj)
    return object()


def _sample_keys(rs: RecurrenceSystem):
    out = {}
    for name, d in rs.dists.items():
        if d.tuple_valued:
            for k in range(1, d.arity + 1):
                lo, hi = _support(d, k)
                out[(name, k)] = Interval.point(lo) if lo == hi else Interval(
                    Poly.const(lo), Poly.const(hi))
        else:
            lo, hi = _support(d, 1)
            out[(name, None)] = Interval(Poly.const(lo), Poly.const(hi))
    return out


def _support(d, k):
    from .distributions import support_interval
    return support_interval(d, k)


def loop_invariant(rs: RecurrenceSystem, ctx: ParamContext, rounds: int = 6) -> StateRanges:
    ints = integral_vars(rs)
    guard = guard_formula(rs)
    samples = _sample_keys(rs)
    init = {}
    for v in rs.program.process_vars:
        iv = None
        for k in range(rs.m):
            p = Interval.point(rs.init[(v, k)])
            iv = p if iv is None else join(iv, p, ctx)
        init[v] = iv

    def transfer(inv: dict) -> dict:
        pre = refine({**inv, **samples}, guard, ints, ctx)
        ranges = StateRanges(inv, samples, ints)
        post = dict(inv)
        for v, upd in rs.updates.items():
            def rng(a, v=v):
                if isinstance(a, Proc) and a.index == Index("i", -1):
                    return pre.get(a.name, Interval.top())
                if isinstance(a, Sample):
                    return samples.get((a.name, a.proj), Interval.top())
                return ranges.of(a)
            post[v] = eval_interval(upd, rng, ctx)
        return post

    inv = dict(init)
    delay = rounds + len(inv)  # chains of copies need one round per variable
    n = 0
    while True:
        post = transfer(inv)
        new = {v: join(inv[v], post[v], ctx) for v in inv}
        if all(_same(new[v], inv[v]) for v in inv):
            break
        if n >= delay:
            new = {v: _widen(inv[v], new[v]) for v in inv}
        inv = new
        n += 1
    # one narrowing step, kept only if it is still a post-fixpoint
    post = transfer(inv)
    narrowed = {v: join(init[v], post[v], ctx) for v in inv}
    again = transfer(narrowed)
    if all(leq(again[v], narrowed[v], ctx) for v in inv):
        inv = narrowed
    return StateRanges(inv, samples, ints)


def _same(a: Interval, b: Interval) -> bool:
    return a.lo == b.lo and a.hi == b.hi


def _widen(old: Interval, new: Interval) -> Interval:
    return Interval(old.lo if old.lo == new.lo else None, old.hi if old.hi == new.hi else None)


def guarded_ranges(rs: RecurrenceSystem, st: StateRanges, ctx: ParamContext) -> dict:
    """Head ranges met with the guard: the pre-states of an iteration."""
    return refine({**st.procs, **st.samples}, guard_formula(rs), st.integral, ctx)


def outcomes(rs: RecurrenceSystem):
    """Joint support of all samplings in one iteration: (values by name, probability)."""
    names = list(rs.dists)
    for combo in product(*(rs.dists[n].support for n in names)):
        prob = Poly.one()
        vals = {}
        for n, (pt, pr) in zip(names, combo):
            prob = prob * pr
            vals[n] = pt
        yield vals, prob


__all__ = ["Num", "ParamContext", "Interval", "eval_interval", "abs_bound", "loop_invariant",
           "guarded_ranges", "outcomes", "StateRanges", "HEAD", "integral_vars", "join", "meet",
           "Truth", "TimeVar", "lower"]
