"""Un-normalized expression trees and the normalizer into :class:`Poly`.

Parsers and tests build trees freely; ``normalize`` collapses them into the
canonical polynomial form.  ``evaluate_tree`` is the independent evaluation
oracle used to check that normalization preserves meaning.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .expr import Atom, Number, Poly


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Leaf:
    atom: Atom


@dataclass(frozen=True)
class Add:
    args: tuple


@dataclass(frozen=True)
class Mul:
    args: tuple


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


Tree = Union[Const, Leaf, Add, Mul, Neg, Pow, Poly]


def normalize(e: Tree) -> Poly:
    if isinstance(e, Poly):
        return e
    if isinstance(e, Const):
        return Poly.const(e.value)
    if isinstance(e, Leaf):
        return Poly.atom(e.atom)
    if isinstance(e, Add):
        out = Poly.zero()
        for a in e.args:
            out = out + normalize(a)
        return out
    if isinstance(e, Mul):
        out = Poly.one()
        for a in e.args:
            out = out * normalize(a)
        return out
    if isinstance(e, Neg):
        return -normalize(e.arg)
    if isinstance(e, Pow):
        return normalize(e.base) ** e.exp
    raise TypeError(f"not an expression tree: {e!r}")


def evaluate_tree(e: Tree, value: Callable[[Atom], Number]) -> Fraction:
    if isinstance(e, Poly):
        return e.evaluate(value)
    if isinstance(e, Const):
        return Fraction(e.value)
    if isinstance(e, Leaf):
        return Fraction(value(e.atom))
    if isinstance(e, Add):
        return sum((evaluate_tree(a, value) for a in e.args), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for a in e.args:
            out *= evaluate_tree(a, value)
        return out
    if isinstance(e, Neg):
        return -evaluate_tree(e.arg, value)
    if isinstance(e, Pow):
        return evaluate_tree(e.base, value) ** e.exp
    raise TypeError(f"not an expression tree: {e!r}")
