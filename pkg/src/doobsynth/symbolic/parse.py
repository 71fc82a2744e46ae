"""Reader for the printed symbolic syntax (round-trips ``str(Poly)``).

Examples: ``x@i - p*i``, ``x@(tau-1)``, ``pi_3(s@j)``, ``E[x@i^2 | F@(i-1)]``,
``Pr[x@tau = b]``, ``sum(j=1..i, x@j)``, ``1{x@tau = 0}``, ``1/(1 - p)``.
"""

from __future__ import annotations

from ..lexer import ParseError, TokenStream, tokenize
from .expr import (CondExp, Expect, Formula, Index, Indicator, Param, Poly, Proc, Rel,
                   Sample, SumAtom, TimeVar, conj, disj, neg)
from .ratfunc import RatFunc

TIME_NAMES = {"i": "i", "j": "j", "k": "k", "tau": "tau", "t": "tau"}
_RELOPS = ("=", "!=", "<", "<=", ">", ">=")


def parse_symexpr(text: str, samples=frozenset(), procs=frozenset()) -> Poly:
    """Parse a polynomial expression; division only by parameter monomials.

    Bare names listed in ``procs`` denote that process variable at exit (``@tau``).
    """
    v = _Reader(text, samples, procs).top()
    if isinstance(v, RatFunc):
        try:
            return v.as_poly()
        except Exception:
            raise ParseError(f"{text!r} is not a polynomial") from None
    return v


def parse_closed_form(text: str) -> RatFunc:
    """Parse a parameter-only rational function such as ``a*(b - a)``."""
    v = _Reader(text, frozenset()).top()
    return RatFunc.lift(v)


def parse_formula(text: str, samples=frozenset()) -> Formula:
    r = _Reader(text, samples)
    f = r.formula()
    r.ts.expect_kind("EOF", "end of input")
    return f


def parse_index(text: str) -> Index:
    r = _Reader(text, frozenset())
    ix = r.index()
    r.ts.expect_kind("EOF", "end of input")
    return ix


class _Reader:
    def __init__(self, text: str, samples, procs=frozenset()):
        self.ts = TokenStream(tokenize(text))
        self.samples = set(samples)
        self.procs = set(procs)

    def top(self):
        v = self.expr()
        self.ts.expect_kind("EOF", "end of input")
        return v

    # arithmetic -------------------------------------------------------------
    def expr(self):
        ts = self.ts
        v = self.term()
        while ts.at("+") or ts.at("-"):
            op = ts.next().text
            w = self.term()
            v = _add(v, w) if op == "+" else _add(v, _neg(w))
        return v

    def term(self):
        ts = self.ts
        v = self.unary()
        while ts.at("*") or ts.at("/"):
            op = ts.next().text
            w = self.unary()
            v = _mul(v, w) if op == "*" else _div(v, w, ts)
        return v

    def unary(self):
        if self.ts.accept("-"):
            return _neg(self.unary())
        return self.power()

    def power(self):
        v = self.primary()
        if self.ts.accept("^"):
            sign = -1 if self.ts.accept("-") else 1
            n = sign * int(self.ts.expect_kind("NUM", "integer exponent").text)
            if n < 0 and not (_is_rf(v) or (v.is_monomial() and v.is_params_only())):
                v = RatFunc.lift(v)
            return v ** n
        return v

    def primary(self):
        ts = self.ts
        t = ts.peek
        if t.kind == "NUM":
            ts.next()
            if t.text == "1" and ts.at("{"):
                ts.next()
                f = self.formula()
                ts.expect("}")
                return Poly.atom(Indicator(f))
            return Poly.const(int(t.text))
        if ts.accept("("):
            v = self.expr()
            ts.expect(")")
            return v
        if t.kind != "NAME":
            ts.error(f"unexpected {t.text or 'end of input'!r}")
        name = ts.next().text
        if name == "E" and ts.at("["):
            ts.next()
            body = self.poly(self.expr())
            if ts.accept("|"):
                ts.expect("F")
                ts.expect("@")
                filt = self.index()
                ts.expect("]")
                return Poly.atom(CondExp(body, filt))
            ts.expect("]")
            return Poly.atom(Expect(body))
        if name in ("Pr", "P") and ts.at("["):
            ts.next()
            f = self.formula()
            ts.expect("]")
            return Poly.atom(Expect(Poly.atom(Indicator(f))))
        if name == "sum" and ts.at("("):
            ts.next()
            var = ts.expect_kind("NAME", "bound variable").text
            ts.expect("=")
            lo = self.index(True)
            ts.expect("..")
            hi = self.index(True)
            ts.expect(",")
            body = self.poly(self.expr())
            ts.expect(")")
            return Poly.atom(SumAtom(var, lo, hi, body))
        if name.startswith("pi_") and name[3:].isdigit() and ts.at("("):
            ts.next()
            inner = ts.expect_kind("NAME", "sample name").text
            ts.expect("@")
            ix = self.index()
            ts.expect(")")
            return Poly.atom(Sample(inner, ix, int(name[3:])))
        if ts.accept("@"):
            ix = self.index()
            if name in self.samples:
                return Poly.atom(Sample(name, ix))
            return Poly.atom(Proc(name, ix))
        if name in self.procs:
            return Poly.atom(Proc(name, Index("tau", 0)))
        if name in TIME_NAMES:
            return Poly.atom(TimeVar(TIME_NAMES[name]))
        return Poly.atom(Param(name))

    def poly(self, v) -> Poly:
        if isinstance(v, RatFunc):
            return v.as_poly()
        return v

    def index(self, offsets: bool = False) -> Index:
        """After ``@`` offsets need parentheses (``x@(i-1)``); sum bounds take them bare."""
        ts = self.ts
        if ts.accept("("):
            ix = self.index(True)
            ts.expect(")")
            return ix
        if ts.accept("-"):
            return Index(None, -int(ts.expect_kind("NUM", "index").text))
        t = ts.peek
        if t.kind == "NUM":
            ts.next()
            return Index(None, int(t.text))
        name = ts.expect_kind("NAME", "index").text
        sym = TIME_NAMES.get(name, name)
        off = 0
        while offsets and (ts.at("+") or ts.at("-")):
            if ts.ahead().kind != "NUM":
                break
            sign = 1 if ts.next().text == "+" else -1
            off += sign * int(ts.next().text)
        return Index(sym, off)

    # formulas -------------------------------------------------------------
    def formula(self) -> Formula:
        items = [self.conj()]
        while self.ts.accept("\\/") or self.ts.accept("or"):
            items.append(self.conj())
        return disj(items)

    def conj(self) -> Formula:
        items = [self.neg()]
        while self.ts.accept("/\\") or self.ts.accept("and"):
            items.append(self.neg())
        return conj(items)

    def neg(self) -> Formula:
        if self.ts.accept("not"):
            return neg(self.neg())
        return self.atomic()

    def atomic(self) -> Formula:
        ts = self.ts
        if ts.accept("true"):
            return conj([])
        if ts.accept("false"):
            return disj([])
        if ts.at("("):
            save = ts.pos
            try:
                return self.relation()
            except ParseError:
                ts.pos = save
            ts.next()
            f = self.formula()
            ts.expect(")")
            return f
        return self.relation()

    def relation(self) -> Formula:
        ts = self.ts
        lhs = self.poly(self.expr())
        parts = []
        while ts.peek.kind == "OP" and ts.peek.text in _RELOPS:
            op = ts.next().text
            rhs = self.poly(self.expr())
            parts.append(Rel.make(op, lhs, rhs))
            lhs = rhs
        if not parts:
            ts.error("expected a comparison")
        return conj(parts)


def _is_rf(v):
    return isinstance(v, RatFunc)


def _add(a, b):
    if _is_rf(a) or _is_rf(b):
        return RatFunc.lift(a) + RatFunc.lift(b)
    return a + b


def _neg(a):
    return -a


def _mul(a, b):
    if _is_rf(a) or _is_rf(b):
        return RatFunc.lift(a) * RatFunc.lift(b)
    return a * b


def _div(a, b, ts):
    if not _is_rf(b) and b.is_monomial() and b.is_params_only() and not _is_rf(a):
        return a / b
    try:
        return RatFunc.lift(a) / RatFunc.lift(b)
    except Exception as exc:
        ts.error(f"unsupported division: {exc}")

