"""Rewrite-rule infrastructure with a deterministic leftmost-innermost driver."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .expr import Atom, CondExp, Expect, Indicator, Poly, SumAtom, SymbolicError

MAX_STEPS = 100_000


class RewriteLoop(SymbolicError):
    pass


@dataclass(frozen=True)
class RewriteRule:
    """A named rule acting on one compound atom.

    ``apply`` receives an atom whose bodies are already in normal form and
    returns the replacement polynomial, or None when the rule does not match.
    Side conditions live inside ``apply``.
    """

    name: str
    anchor: str
    apply: Callable[[Atom], Poly | None] = field(compare=False)


@dataclass
class RewriteTrace:
    steps: list = field(default_factory=list)
    counts: Counter = field(default_factory=Counter)

    def lines(self) -> list[str]:
        return [f"{name}: {before} ~> {after}" for name, before, after in self.steps]


def rewrite_fixpoint(e: Poly, rules: list[RewriteRule], *, max_steps: int = MAX_STEPS,
                     trace: RewriteTrace | None = None) -> Poly:
    """Rewrite until no rule applies anywhere in ``e``."""
    return _Engine(rules, max_steps, trace).poly(e)


class _Engine:
    def __init__(self, rules, max_steps, trace):
        self.rules = rules
        self.max_steps = max_steps
        self.trace = trace if trace is not None else RewriteTrace()
        self.memo: dict = {}
        self.steps = 0

    def poly(self, p: Poly) -> Poly:
        return p.map_atoms(self.atom)

    def atom(self, a: Atom) -> Poly | None:
        if not a.is_compound():
            return None
        if a in self.memo:
            return self.memo[a]
        b = self.inner(a)
        result = None if b is a else Poly.atom(b)
        for rule in self.rules:
            r = rule.apply(b)
            if r is None:
                continue
            self.fire(rule, b, r)
            result = self.poly(r)
            break
        self.memo[a] = result
        return result

    def inner(self, a: Atom) -> Atom:
        if isinstance(a, SumAtom):
            body = self.poly(a.body)
            return a if body is a.body else SumAtom(a.var, a.lo, a.hi, body)
        if isinstance(a, CondExp):
            body = self.poly(a.body)
            return a if body is a.body else CondExp(body, a.filt)
        if isinstance(a, Expect):
            body = self.poly(a.body)
            return a if body is a.body else Expect(body)
        if isinstance(a, Indicator):
            f = a.formula.map_polys(self.poly)
            return a if f == a.formula else Indicator(f)
        return a

    def fire(self, rule: RewriteRule, before: Atom, after: Poly) -> None:
        self.steps += 1
        self.trace.counts[rule.name] += 1
        self.trace.steps.append((rule.name, str(before), str(after)))
        if self.steps > self.max_steps:
            top = [n for n, _ in self.trace.counts.most_common(2)]
            raise RewriteLoop(f"rewriting exceeded {self.max_steps} steps; "
                              f"oscillating rules: {' / '.join(top)}")
