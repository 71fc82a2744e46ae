"""AST for the loop DSL.  Source positions never take part in equality."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


_POS = field(default=Pos(), compare=False, repr=False)


# arithmetic ---------------------------------------------------------------

class Expr:
    def children(self) -> tuple:
        return ()

    def walk(self) -> Iterator[Expr]:
        yield self
        for c in self.children():
            yield from c.walk()


@dataclass(frozen=True)
class Num(Expr):
    value: int
    pos: Pos = _POS


@dataclass(frozen=True)
class ParamRef(Expr):
    name: str
    pos: Pos = _POS


@dataclass(frozen=True)
class ProcRef(Expr):
    """``x`` (offset 0) or ``x[-n]``."""

    name: str
    offset: int = 0
    pos: Pos = _POS


@dataclass(frozen=True)
class SampleRef(Expr):
    name: str
    pos: Pos = _POS


@dataclass(frozen=True)
class TimeRef(Expr):
    """The reserved loop counter ``t`` (hints only)."""

    pos: Pos = _POS


@dataclass(frozen=True)
class Proj(Expr):
    index: int
    arg: SampleRef
    pos: Pos = _POS

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr
    pos: Pos = _POS

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    pos: Pos = _POS

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int
    pos: Pos = _POS

    def children(self):
        return (self.base,)


# guards and hint formulas -------------------------------------------------

class Guard:
    def children(self) -> tuple:
        return ()

    def exprs(self) -> Iterator[Expr]:
        for c in self.children():
            if isinstance(c, Expr):
                yield c
            else:
                yield from c.exprs()


@dataclass(frozen=True)
class BoolConst(Guard):
    value: bool


@dataclass(frozen=True)
class Cmp(Guard):
    """Chained comparison ``e0 op1 e1 op2 e2 ...``."""

    ops: tuple
    args: tuple

    def children(self):
        return self.args


@dataclass(frozen=True)
class BoolOp(Guard):
    op: str  # and, or, ->
    items: tuple

    def children(self):
        return self.items


@dataclass(frozen=True)
class NotG(Guard):
    arg: Guard

    def children(self):
        return (self.arg,)


# distributions ------------------------------------------------------------

@dataclass(frozen=True)
class BernD:
    prob: Expr
    v1: int
    v0: int


@dataclass(frozen=True)
class UnifD:
    values: tuple


@dataclass(frozen=True)
class MatchesD:
    pattern: str
    size: Expr


@dataclass(frozen=True)
class TableD:
    rows: tuple  # ((point tuple, prob Expr), ...)
    scalar: bool = False


# program ------------------------------------------------------------------

@dataclass(frozen=True)
class ParamDecl:
    name: str
    integral: bool = False
    lo: Expr | None = None
    hi: Expr | None = None
    lo_closed: bool = False
    hi_closed: bool = False


@dataclass(frozen=True)
class InitAssign:
    var: str
    index: int
    expr: Expr
    pos: Pos = _POS


@dataclass(frozen=True)
class Sampling:
    var: str
    dist: object
    pos: Pos = _POS


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    pos: Pos = _POS


AT_EXIT, EVERY, IMPLIES = "at-exit", "every", "implies"


@dataclass(frozen=True)
class Hint:
    scope: str
    formula: Guard


@dataclass(frozen=True)
class Variant:
    expr: Expr
    bound: Expr | None = None
    eps: Expr | None = None


@dataclass(frozen=True)
class Pragmas:
    seed: Expr | None = None
    hints: tuple = ()
    solve_for: str | None = None
    variant: Variant | None = None
    use_facts: tuple = ()
    assume_ost: bool = False
    sim_params: tuple = ()  # ((name, Fraction), ...)


@dataclass(frozen=True)
class Program:
    params: tuple
    init: tuple
    guard: Guard
    samples: tuple
    body: tuple
    pragmas: Pragmas = Pragmas()

    @property
    def param_names(self) -> list[str]:
        return [d.name for d in self.params]

    def param(self, name: str) -> ParamDecl:
        return next(d for d in self.params if d.name == name)

    @property
    def process_vars(self) -> list[str]:
        seen: list[str] = []
        for ia in self.init:
            if ia.var not in seen:
                seen.append(ia.var)
        return seen

    @property
    def sample_vars(self) -> list[str]:
        return [s.var for s in self.samples]

    def sampling(self, name: str) -> Sampling:
        return next(s for s in self.samples if s.var == name)

    @property
    def mutated(self) -> list[str]:
        out: list[str] = []
        for a in self.body:
            if a.var not in out:
                out.append(a.var)
        return out

    @property
    def init_length(self) -> int:
        return 1 + max(ia.index for ia in self.init)

    def init_expr(self, var: str, index: int) -> Expr:
        return next(ia.expr for ia in self.init if ia.var == var and ia.index == index)

    def sim_params(self) -> dict[str, Fraction]:
        return dict(self.pragmas.sim_params)
