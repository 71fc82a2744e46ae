"""Canonical symbolic expressions.

Every analysis-time expression is a :class:`Poly`: a finite sum of monomials
with exact rational coefficients.  A monomial is a product of atoms raised to
integer powers.  Parameters may carry negative exponents (Laurent monomials,
e.g. ``L^-1``); every other atom only carries positive powers.

Compound constructs (sums over a bound index, conditional expectations,
expectations, indicators) are themselves atoms whose bodies are canonical
polynomials, so a single polynomial normal form covers the whole language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Union

DEGREE_CAP = 64


@lru_cache(maxsize=None)
def name_key(name: str) -> tuple:
    """Natural order, so ``match2`` sorts before ``match10``."""
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name))

Number = Union[int, Fraction]


class SymbolicError(Exception):
    pass


class DegreeOverflow(SymbolicError):
    pass


class CaptureError(SymbolicError):
    pass


# ---------------------------------------------------------------------------
# Indices


_SYM_RANK = {"tau": 0, "i": 1, "j": 2, "k": 3}


@dataclass(frozen=True)
class Index:
    """Affine index ``sym + off``; ``sym is None`` means an absolute index."""

    sym: str | None
    off: int = 0

    def __add__(self, k: int) -> Index:
        return Index(self.sym, self.off + k)

    def __sub__(self, k: int) -> Index:
        return Index(self.sym, self.off - k)

    @property
    def sort_key(self):
        return (_SYM_RANK.get(self.sym, 4) if self.sym else 9, self.sym or "", -self.off)

    def substitute(self, sym: str, base: Index) -> Index:
        if self.sym != sym:
            return self
        return Index(base.sym, base.off + self.off)

    def as_poly(self) -> Poly:
        if self.sym is None:
            return Poly.const(self.off)
        return Poly.atom(TimeVar(self.sym)) + self.off

    def compare(self, other: Index) -> int | None:
        """Sign of ``self - other`` when it is decidable syntactically."""
        if self.sym != other.sym:
            return None
        d = self.off - other.off
        return (d > 0) - (d < 0)

    def __str__(self) -> str:
        if self.sym is None:
            return str(self.off)
        if self.off == 0:
            return self.sym
        return f"{self.sym}{'+' if self.off > 0 else '-'}{abs(self.off)}"

    def bracketed(self) -> str:
        s = str(self)
        return f"({s})" if self.sym is not None and self.off != 0 or self.off < 0 else s


# ---------------------------------------------------------------------------
# Atoms


class Atom:
    kind_rank = 99

    @cached_property
    def sort_key(self):
        return (self.kind_rank,) + self._key()

    def _key(self):
        raise NotImplementedError

    def __lt__(self, other: Atom) -> bool:
        return self.sort_key < other.sort_key

    def is_compound(self) -> bool:
        return False

    def indices(self) -> Iterable[Index]:
        return ()


@dataclass(frozen=True)
class Proc(Atom):
    """Value of process variable ``name`` at time ``index``."""

    name: str
    index: Index
    kind_rank = 0

    def _key(self):
        return (name_key(self.name), self.index.sort_key)

    def indices(self):
        return (self.index,)

    def __str__(self):
        return f"{self.name}@{self.index.bracketed()}"


@dataclass(frozen=True)
class Sample(Atom):
    """Sample ``name`` drawn at iteration ``index``, optionally projected."""

    name: str
    index: Index
    proj: int | None = None
    kind_rank = 1

    def _key(self):
        return (name_key(self.name), self.index.sort_key, self.proj or 0)

    def indices(self):
        return (self.index,)

    def __str__(self):
        s = f"{self.name}@{self.index.bracketed()}"
        return s if self.proj is None else f"pi_{self.proj}({s})"


@dataclass(frozen=True)
class Expect(Atom):
    body: Poly
    kind_rank = 2

    def _key(self):
        return (self.body.sort_key,)

    def is_compound(self):
        return True

    def __str__(self):
        ind = self.body.single_atom()
        if isinstance(ind, Indicator):
            return f"Pr[{ind.formula}]"
        return f"E[{self.body}]"


@dataclass(frozen=True)
class Indicator(Atom):
    formula: Formula
    kind_rank = 3

    def _key(self):
        return (str(self.formula),)

    def is_compound(self):
        return True

    def __str__(self):
        return f"1{{{self.formula}}}"


@dataclass(frozen=True)
class SumAtom(Atom):
    """``sum_{var=lo}^{hi} body``."""

    var: str
    lo: Index
    hi: Index
    body: Poly
    kind_rank = 4

    def _key(self):
        return (self.var, self.lo.sort_key, self.hi.sort_key, self.body.sort_key)

    def is_compound(self):
        return True

    def indices(self):
        return (self.lo, self.hi)

    def __str__(self):
        return f"sum({self.var}={self.lo}..{self.hi}, {self.body})"


@dataclass(frozen=True)
class CondExp(Atom):
    """Conditional expectation of ``body`` given the filtration at ``filt``."""

    body: Poly
    filt: Index
    kind_rank = 5

    def _key(self):
        return (self.filt.sort_key, self.body.sort_key)

    def is_compound(self):
        return True

    def indices(self):
        return (self.filt,)

    def __str__(self):
        return f"E[{self.body} | F@{self.filt.bracketed()}]"


@dataclass(frozen=True)
class TimeVar(Atom):
    """The value of a time symbol (loop index ``i``, bound ``j``, ``tau``)."""

    name: str
    kind_rank = 6

    def _key(self):
        return (_SYM_RANK.get(self.name, 4), self.name)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Param(Atom):
    name: str
    kind_rank = 7

    def _key(self):
        return (self.name,)

    def __str__(self):
        return self.name


# ---------------------------------------------------------------------------
# Event formulas (indicator bodies)


class Formula:
    def map_polys(self, fn: Callable[[Poly], Poly]) -> Formula:
        raise NotImplementedError

    def polys(self) -> Iterable[Poly]:
        raise NotImplementedError


@dataclass(frozen=True)
class Truth(Formula):
    value: bool

    def map_polys(self, fn):
        return self

    def polys(self):
        return ()

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Rel(Formula):
    """``poly op 0`` with op in ``=, !=, <, <=``."""

    op: str
    poly: Poly

    @staticmethod
    def make(op: str, lhs: Poly, rhs: Poly) -> Formula:
        if op == ">":
            op, lhs, rhs = "<", rhs, lhs
        elif op == ">=":
            op, lhs, rhs = "<=", rhs, lhs
        d = lhs - rhs
        if d.is_const():
            c = d.const_value()
            return Truth({"=": c == 0, "!=": c != 0, "<": c < 0, "<=": c <= 0}[op])
        lead = next((c for m, c in d.items() if any(not isinstance(a, Param) for a, _ in m)),
                    d.leading_coeff())
        if op in ("=", "!="):
            d = d * (1 / lead)
        else:
            d = d * (1 / abs(lead))
        return Rel(op, d)

    def map_polys(self, fn):
        return Rel.make(self.op, fn(self.poly), Poly.zero())

    def polys(self):
        return (self.poly,)

    def __str__(self):
        lhs, rhs = self.poly.split_constant_part()
        if self.op in ("<", "<=") and lhs and next(iter(lhs.items()))[1] < 0:
            return f"{-lhs} {'>' if self.op == '<' else '>='} {rhs}"
        return f"{lhs} {self.op} {-rhs}"


@dataclass(frozen=True)
class And(Formula):
    items: tuple

    def map_polys(self, fn):
        return conj([f.map_polys(fn) for f in self.items])

    def polys(self):
        for f in self.items:
            yield from f.polys()

    def __str__(self):
        return " /\\ ".join(_paren_formula(f) for f in self.items)


@dataclass(frozen=True)
class Or(Formula):
    items: tuple

    def map_polys(self, fn):
        return disj([f.map_polys(fn) for f in self.items])

    def polys(self):
        for f in self.items:
            yield from f.polys()

    def __str__(self):
        return " \\/ ".join(_paren_formula(f) for f in self.items)


@dataclass(frozen=True)
class Not(Formula):
    item: Formula

    def map_polys(self, fn):
        return neg(self.item.map_polys(fn))

    def polys(self):
        return self.item.polys()

    def __str__(self):
        return f"not {_paren_formula(self.item)}"


def _paren_formula(f: Formula) -> str:
    return f"({f})" if isinstance(f, (And, Or, Not)) else str(f)


def conj(items) -> Formula:
    flat = []
    for f in items:
        if isinstance(f, Truth):
            if not f.value:
                return f
            continue
        flat.extend(f.items if isinstance(f, And) else [f])
    flat = sorted(set(flat), key=str)
    if not flat:
        return Truth(True)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(items) -> Formula:
    flat = []
    for f in items:
        if isinstance(f, Truth):
            if f.value:
                return f
            continue
        flat.extend(f.items if isinstance(f, Or) else [f])
    flat = sorted(set(flat), key=str)
    if not flat:
        return Truth(False)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, Truth):
        return Truth(not f.value)
    if isinstance(f, Not):
        return f.item
    return Not(f)


# ---------------------------------------------------------------------------
# Polynomials

Monomial = tuple  # tuple[tuple[Atom, int], ...] sorted by atom order


@lru_cache(maxsize=None)
def _mono_key(mono: Monomial):
    return tuple((a.sort_key, -e) for a, e in mono)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps: dict = dict(m1)
    for a, e in m2:
        exps[a] = exps.get(a, 0) + e
    return _make_mono(exps)


def _make_mono(exps: Mapping[Atom, int]) -> Monomial:
    out = []
    for a, e in exps.items():
        if e == 0:
            continue
        if e < 0 and not isinstance(a, Param):
            raise SymbolicError(f"negative power of non-parameter atom {a}")
        if abs(e) > DEGREE_CAP:
            raise DegreeOverflow(f"exponent {e} of {a} exceeds degree cap {DEGREE_CAP}")
        out.append((a, e))
    out.sort(key=lambda t: t[0].sort_key)
    return tuple(out)


def _frac(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class Poly:
    """Immutable canonical polynomial (see module docstring)."""

    __slots__ = ("_terms", "_hash", "_key")

    def __init__(self, terms: Mapping[Monomial, Fraction] = ()):
        items = [(m, c) for m, c in dict(terms).items() if c != 0]
        items.sort(key=lambda t: _mono_key(t[0]))
        self._terms = dict(items)
        self._hash = None
        self._key = None

    # construction ------------------------------------------------------
    @staticmethod
    def zero() -> Poly:
        return _ZERO

    @staticmethod
    def one() -> Poly:
        return _ONE

    @staticmethod
    def const(c: Number) -> Poly:
        c = _frac(c)
        return Poly({(): c}) if c else _ZERO

    @staticmethod
    def atom(a: Atom, exp: int = 1) -> Poly:
        return Poly({_make_mono({a: exp}): Fraction(1)})

    @staticmethod
    def lift(x) -> Poly:
        if isinstance(x, Poly):
            return x
        if isinstance(x, Atom):
            return Poly.atom(x)
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot lift {x!r} to Poly")

    # access -------------------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_const(self) -> bool:
        return all(not m for m in self._terms)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise SymbolicError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def leading_coeff(self) -> Fraction:
        for m, c in reversed(list(self._terms.items())):
            return c
        return Fraction(0)

    def atoms(self) -> set:
        return {a for m in self._terms for a, _ in m}

    def all_atoms(self) -> set:
        """Atoms including those nested inside compound bodies."""
        out = set()
        for a in self.atoms():
            out.add(a)
            for p in _bodies(a):
                out |= p.all_atoms()
        return out

    def is_params_only(self) -> bool:
        return all(isinstance(a, Param) for m in self._terms for a, _ in m)

    def single_atom(self) -> Atom | None:
        if len(self._terms) == 1:
            (m, c), = self._terms.items()
            if c == 1 and len(m) == 1 and m[0][1] == 1:
                return m[0][0]
        return None

    def degree_in(self, pred: Callable[[Atom], bool]) -> int:
        return max((sum(e for a, e in m if pred(a)) for m in self._terms), default=0)

    @property
    def sort_key(self):
        if self._key is None:
            self._key = tuple((_mono_key(m), c) for m, c in self._terms.items())
        return self._key

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> Poly:
        other = Poly.lift(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> Poly:
        return self + (-Poly.lift(other))

    def __rsub__(self, other) -> Poly:
        return Poly.lift(other) - self

    def __mul__(self, other) -> Poly:
        if isinstance(other, (int, Fraction)):
            other = _frac(other)
            if other == 0:
                return _ZERO
            return Poly({m: c * other for m, c in self._terms.items()})
        other = Poly.lift(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Poly:
        if not isinstance(n, int):
            raise SymbolicError(f"unsupported exponent {n!r}")
        if n < 0:
            if not self.is_monomial():
                raise SymbolicError(f"cannot invert non-monomial {self}")
            (m, c), = self._terms.items()
            return Poly({_make_mono({a: e * n for a, e in m}): 1 / c ** -n})
        if n > DEGREE_CAP and not self.is_const():
            raise DegreeOverflow(f"power {n} exceeds degree cap {DEGREE_CAP}")
        result, base = _ONE, self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def __truediv__(self, other) -> Poly:
        if isinstance(other, (int, Fraction)):
            return self * (1 / _frac(other))
        other = Poly.lift(other)
        if other.is_monomial() and other.is_params_only():
            return self * other ** -1
        raise SymbolicError(f"cannot divide by non-monomial {other}")

    # comparison ---------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # structural maps ----------------------------------------------------
    def map_atoms(self, fn: Callable[[Atom], Poly | None]) -> Poly:
        """Replace each top-level atom ``a`` by ``fn(a)`` (None keeps it)."""
        cache: dict = {}
        out = _ZERO
        changed = False
        for m, c in self._terms.items():
            term = Poly.const(c)
            pending: dict = {}
            for a, e in m:
                if a not in cache:
                    cache[a] = fn(a)
                r = cache[a]
                if r is None:
                    pending[a] = e
                else:
                    changed = True
                    term = term * r ** e
            if pending:
                term = term * Poly({_make_mono(pending): Fraction(1)})
            out = out + term
        return out if changed else self

    def subs(self, bindings: Mapping[Atom, Poly]) -> Poly:
        """Simultaneous capture-avoiding substitution (recurses into bodies)."""
        if not bindings:
            return self
        bindings = {a: Poly.lift(v) for a, v in bindings.items()}

        def fn(a):
            if a in bindings:
                return bindings[a]
            if a.is_compound():
                b = _subs_compound(a, bindings)
                return None if b is a else Poly.atom(b)
            return None

        return self.map_atoms(fn)

    def reindex(self, sym: str, base: Index) -> Poly:
        """Rename time symbol ``sym`` to ``base`` in indices and values."""

        def fn(a):
            return _reindex_atom(a, sym, base)

        return self.map_atoms(fn)

    def evaluate(self, value: Callable[[Atom], Number]) -> Fraction:
        total = Fraction(0)
        cache: dict = {}
        for m, c in self._terms.items():
            t = c
            for a, e in m:
                if a not in cache:
                    cache[a] = _frac(value(a))
                t *= cache[a] ** e
            total += t
        return total

    def split_params(self) -> dict:
        """Group as ``{non-parameter monomial: parameter coefficient}``."""
        groups: dict = {}
        for m, c in self._terms.items():
            pm = tuple((a, e) for a, e in m if isinstance(a, Param))
            rest = tuple((a, e) for a, e in m if not isinstance(a, Param))
            groups.setdefault(rest, {})[pm] = c
        return {rest: Poly(coeffs) for rest, coeffs in groups.items()}

    def split_constant_part(self) -> tuple[Poly, Poly]:
        """(part with non-parameter atoms, parameter-only part)."""
        var, const = {}, {}
        for m, c in self._terms.items():
            (const if all(isinstance(a, Param) for a, _ in m) else var)[m] = c
        return Poly(var), Poly(const)

    # printing -----------------------------------------------------------
    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)!r})"


_ZERO = Poly()
_ONE = Poly({(): Fraction(1)})


def _bodies(a: Atom):
    if isinstance(a, (Expect, SumAtom, CondExp)):
        return (a.body,)
    if isinstance(a, Indicator):
        return tuple(a.formula.polys())
    return ()


def _mentions_sym(a: Atom, sym: str) -> bool:
    if isinstance(a, TimeVar):
        return a.name == sym
    if any(ix.sym == sym for ix in a.indices()):
        return True
    return any(_mentions_sym(b, sym) for p in _bodies(a) for b in p.atoms())


def _subs_compound(a: Atom, bindings: Mapping[Atom, Poly]) -> Atom:
    if isinstance(a, SumAtom):
        inner = {k: v for k, v in bindings.items() if not _mentions_sym(k, a.var)}
        body = a.body.subs(inner) if inner else a.body
        return a if body == a.body else SumAtom(a.var, a.lo, a.hi, body)
    if isinstance(a, CondExp):
        body = a.body.subs(bindings)
        if body == a.body:
            return a
        _check_filtration(body, a.filt)
        return CondExp(body, a.filt)
    if isinstance(a, Expect):
        body = a.body.subs(bindings)
        return a if body == a.body else Expect(body)
    if isinstance(a, Indicator):
        f = a.formula.map_polys(lambda p: p.subs(bindings))
        return a if f == a.formula else Indicator(f)
    return a


def _check_filtration(body: Poly, filt: Index) -> None:
    for b in body.atoms():
        if isinstance(b, Sample):
            d = b.index.compare(filt)
            if d is not None and d > 1:
                raise CaptureError(
                    f"sample {b} lies beyond the next step of filtration F@{filt}")


def _reindex_atom(a: Atom, sym: str, base: Index) -> Poly | None:
    if isinstance(a, TimeVar):
        return base.as_poly() if a.name == sym else None
    if isinstance(a, Proc):
        ix = a.index.substitute(sym, base)
        return None if ix == a.index else Poly.atom(Proc(a.name, ix))
    if isinstance(a, Sample):
        ix = a.index.substitute(sym, base)
        return None if ix == a.index else Poly.atom(Sample(a.name, ix, a.proj))
    if isinstance(a, SumAtom):
        lo, hi = a.lo.substitute(sym, base), a.hi.substitute(sym, base)
        body = a.body if a.var == sym else a.body.reindex(sym, base)
        if base.sym == a.var and a.var != sym and _mentions_sym_poly(a.body, a.var):
            raise CaptureError(f"reindexing {sym} -> {base} captures bound {a.var}")
        b = SumAtom(a.var, lo, hi, body)
        return None if b == a else Poly.atom(b)
    if isinstance(a, CondExp):
        b = CondExp(a.body.reindex(sym, base), a.filt.substitute(sym, base))
        return None if b == a else Poly.atom(b)
    if isinstance(a, Expect):
        b = Expect(a.body.reindex(sym, base))
        return None if b == a else Poly.atom(b)
    if isinstance(a, Indicator):
        f = a.formula.map_polys(lambda p: p.reindex(sym, base))
        return None if f == a.formula else Poly.atom(Indicator(f))
    return None


def _mentions_sym_poly(p: Poly, sym: str) -> bool:
    return any(_mentions_sym(a, sym) for a in p.atoms())


# ---------------------------------------------------------------------------
# Pretty printing


def _param_mono_key(mono: Monomial):
    return (sum(e for _, e in mono), tuple((a.sort_key, e) for a, e in mono))


def _fmt_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_factor(a: Atom, e: int) -> str:
    s = str(a)
    if e == 1:
        return s
    return f"{s}^{e}"


def _fmt_mono(c: Fraction, factors: list[str]) -> tuple[str, str]:
    """Return (sign, magnitude text) for ``c * prod(factors)``."""
    sign = "-" if c < 0 else "+"
    mag = abs(c)
    if not factors:
        return sign, _fmt_rat(mag)
    body = "*".join(factors)
    if mag == 1:
        return sign, body
    if mag.denominator == 1:
        return sign, f"{mag.numerator}*{body}"
    if mag.numerator == 1:
        return sign, f"{body}/{mag.denominator}"
    return sign, f"{mag.numerator}*{body}/{mag.denominator}"


def _join_signed(parts: list[tuple[str, str]]) -> str:
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


def format_params(p: Poly) -> str:
    """Print a parameter-only polynomial by ascending degree."""
    items = sorted(p.items(), key=lambda t: _param_mono_key(t[0]))
    return _join_signed([_fmt_mono(c, [_fmt_factor(a, e) for a, e in m]) for m, c in items])


def format_poly(p: Poly) -> str:
    if p.is_params_only():
        return format_params(p)
    groups = p.split_params()
    keyed = sorted(((rest, coef) for rest, coef in groups.items() if rest),
                   key=lambda t: _mono_key(t[0]))
    parts: list[tuple[str, str]] = []
    for rest, coef in keyed:
        factors = [_fmt_factor(a, e) for a, e in rest]
        if coef.is_monomial():
            (pm, c), = coef.items()
            parts.append(_fmt_mono(c, [_fmt_factor(a, e) for a, e in pm] + factors))
        else:
            parts.append(("+", f"({format_params(coef)})*" + "*".join(factors)))
    const = groups.get((), None)
    if const is not None:
        items = sorted(const.items(), key=lambda t: _param_mono_key(t[0]))
        parts.extend(_fmt_mono(c, [_fmt_factor(a, e) for a, e in m]) for m, c in items)
    return _join_signed(parts)


# convenience constructors ---------------------------------------------------


def proc(name: str, sym: str | None = "i", off: int = 0) -> Poly:
    return Poly.atom(Proc(name, Index(sym, off)))


def sample(name: str, sym: str | None = "i", off: int = 0, proj: int | None = None) -> Poly:
    return Poly.atom(Sample(name, Index(sym, off), proj))


def param(name: str) -> Poly:
    return Poly.atom(Param(name))


def timevar(name: str) -> Poly:
    return Poly.atom(TimeVar(name))


def const(c: Number) -> Poly:
    return Poly.const(c)
