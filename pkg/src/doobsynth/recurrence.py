"""Polynomial recurrences extracted from a program, and seed lifting.

Time is absolute: the ``m`` initial values of each process variable occupy
indices ``0..m-1`` and loop iteration ``n >= 1`` writes index ``m-1+n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from . import distributions as D
from .symbolic.expr import (And, Formula, Index, Not, Or, Param, Poly, Proc, Rel, Sample,
                            SymbolicError, TimeVar, Truth, conj, disj, neg)
from .symbolic.ratfunc import RatFunc
from .syntax import (BernD, BinOp, BoolConst, BoolOp, Cmp, Expr, Guard, MatchesD, Neg,
                     NotG, Num, ParamRef, Pow, ProcRef, Program, Proj, SampleRef, TableD,
                     TimeRef, UnifD)


class RecurrenceError(ValueError):
    pass


ProcFn = Callable[[str, int], Poly]
SampleFn = Callable[[str, "int | None"], Poly]


def lower(e: Expr, proc: ProcFn | None = None, sample: SampleFn | None = None,
          t: Poly | None = None) -> Poly:
    """Translate an arithmetic AST into a canonical polynomial."""

    def go(n: Expr) -> Poly:
        if isinstance(n, Num):
            return Poly.const(n.value)
        if isinstance(n, ParamRef):
            return Poly.atom(Param(n.name))
        if isinstance(n, ProcRef):
            if proc is None:
                raise RecurrenceError(f"process variable {n.name} not allowed here")
            return proc(n.name, n.offset)
        if isinstance(n, SampleRef):
            if sample is None:
                raise RecurrenceError(f"sample variable {n.name} not allowed here")
            return sample(n.name, None)
        if isinstance(n, Proj):
            if sample is None:
                raise RecurrenceError(f"sample variable {n.arg.name} not allowed here")
            return sample(n.arg.name, n.index)
        if isinstance(n, TimeRef):
            if t is None:
                raise RecurrenceError("t not allowed here")
            return t
        if isinstance(n, Neg):
            return -go(n.arg)
        if isinstance(n, Pow):
            return go(n.base) ** n.exp
        if isinstance(n, BinOp):
            a, b = go(n.left), go(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            try:
                return a / b
            except (SymbolicError, ZeroDivisionError) as exc:
                raise RecurrenceError(f"cannot divide by {b}: {exc}") from None
        raise TypeError(n)

    return go(e)


def lower_params(e: Expr) -> RatFunc:
    """Parameter-only expression as a rational function (divisions allowed)."""
    if isinstance(e, BinOp) and e.op == "/":
        return lower_params(e.left) / lower_params(e.right)
    if isinstance(e, BinOp):
        a, b = lower_params(e.left), lower_params(e.right)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    if isinstance(e, Neg):
        return -lower_params(e.arg)
    if isinstance(e, Pow):
        return lower_params(e.base) ** e.exp
    return RatFunc(lower(e))


def lower_guard(g: Guard, **kw) -> Formula:
    if isinstance(g, BoolConst):
        return Truth(g.value)
    if isinstance(g, Cmp):
        vals = [lower(a, **kw) for a in g.args]
        return conj([Rel.make(op, l, r) for op, l, r in zip(g.ops, vals, vals[1:])])
    if isinstance(g, NotG):
        return neg(lower_guard(g.arg, **kw))
    if isinstance(g, BoolOp):
        items = [lower_guard(x, **kw) for x in g.items]
        if g.op == "and":
            return conj(items)
        if g.op == "or":
            return disj(items)
        return disj([neg(items[0]), items[1]])
    raise TypeError(g)


def build_distribution(dist) -> D.Distribution:
    try:
        if isinstance(dist, BernD):
            return D.bern(lower(dist.prob), dist.v1, dist.v0)
        if isinstance(dist, UnifD):
            return D.unif(dist.values)
        if isinstance(dist, MatchesD):
            return D.matches(dist.pattern, lower(dist.size))
        if isinstance(dist, TableD):
            return D.table([(pt, lower(pr)) for pt, pr in dist.rows])
    except (SymbolicError, D.DistributionError) as exc:
        raise RecurrenceError(str(exc)) from None
    raise TypeError(dist)


@dataclass(frozen=True)
class RecurrenceSystem:
    program: Program = field(repr=False)
    m: int
    updates: Mapping[str, Poly]      # X_i = P_x(X_{i-1}, ..., S_i), symbol "i"
    init: Mapping[tuple, Poly]       # (var, k) -> parameter poly
    constants: Mapping[str, Poly]    # unmutated variables
    dists: Mapping[str, D.Distribution]
    depth: Mapping[str, int]

    @property
    def variables(self) -> list[str]:
        return list(self.updates)

    def update_at(self, var: str, ix: Index) -> Poly:
        """P_x with its time symbol moved to ``ix``."""
        return self.updates[var].reindex("i", ix)

    def init_bindings(self) -> dict:
        return {Proc(v, Index(None, k)): val for (v, k), val in self.init.items()}

    def unroll_map(self, ix: Index) -> dict:
        return {Proc(v, ix): self.update_at(v, ix) for v in self.updates}

    def lines(self) -> list[str]:
        out = [f"{v}@i = {p}" for v, p in self.updates.items()]
        out += [f"{v} = {c} (constant)" for v, c in self.constants.items()]
        return out


def extract_recurrences(p: Program) -> RecurrenceSystem:
    m = p.init_length
    init: dict = {}
    for ia in p.init:
        init[(ia.var, ia.index)] = lower(ia.expr)
    mutated = set(p.mutated)
    constants = {}
    for v in p.process_vars:
        if v not in mutated:
            vals = {init[(v, k)] for k in range(m)}
            if len(vals) != 1:
                raise RecurrenceError(f"{v} is never assigned in the loop but its initial "
                                      "history is not constant")
            constants[v] = vals.pop()
    dists = {}
    for s in p.samples:
        try:
            dists[s.var] = build_distribution(s.dist)
        except RecurrenceError as exc:
            raise RecurrenceError(f"{s.pos.line}:{s.pos.col}: {exc}") from None

    def sample(name, proj):
        return Poly.atom(Sample(name, Index("i", 0), proj))

    env: dict[str, Poly] = {}
    depth: dict[str, int] = {v: 0 for v in p.process_vars}

    def proc(name, off):
        if off == 0:
            return env[name]
        depth[name] = max(depth[name], -off)
        if name in constants:
            return constants[name]
        return Poly.atom(Proc(name, Index("i", off)))

    for a in p.body:
        env[a.var] = lower(a.expr, proc, sample)
    updates = {v: env[v] for v in p.mutated}
    return RecurrenceSystem(p, m, updates, init, constants, dists, depth)


@dataclass(frozen=True)
class SeedProcess:
    E: Poly        # E_i, symbol "i"
    E0: Poly       # value at index m-1 after substituting initial values
    E_start: Poly  # E at index m-1 with atoms kept

    def at(self, ix: Index) -> Poly:
        return self.E.reindex("i", ix)


def seed_poly(rs: RecurrenceSystem, seed: Expr, sym: str = "i") -> Poly:
    def proc(name, off):
        if name in rs.constants:
            return rs.constants[name]
        return Poly.atom(Proc(name, Index(sym, off)))

    def sample(name, proj):
        return Poly.atom(Sample(name, Index(sym, 0), proj))

    return lower(seed, proc, sample)


def lift_seed(rs: RecurrenceSystem, seed: Expr) -> SeedProcess:
    E = seed_poly(rs, seed)
    if any(isinstance(a, Sample) for a in E.all_atoms()):
        raise RecurrenceError("the seed references a sample variable, which has no value before "
                              "the first iteration; use a seed over process variables only")
    start = E.reindex("i", Index(None, rs.m - 1))
    for a in start.atoms():
        if isinstance(a, Proc) and a.index.off < 0:
            raise RecurrenceError(f"seed history {a} reaches before the initial values")
    E0 = start.subs(rs.init_bindings())
    return SeedProcess(E, E0, start)


# concrete unrolling (shared oracle with the interpreter) -------------------

def unroll(rs: RecurrenceSystem, params: Mapping[str, Fraction], samples: list[dict],
           ) -> list[dict[str, Fraction]]:
    """States at indices m-1, m, ... driven by explicit per-iteration samples.

    ``samples[n]`` maps a sample name to its drawn value (an int or a tuple).
    """
    hist: dict = {}
    for (v, k), val in rs.init.items():
        hist[(v, k)] = val.evaluate(lambda a: params[a.name])
    states = [{v: hist[(v, rs.m - 1)] for v in rs.program.process_vars}]
    for n, draw in enumerate(samples, start=1):
        i = rs.m - 1 + n

        def value(a, i=i, draw=draw):
            if isinstance(a, Param):
                return params[a.name]
            if isinstance(a, Proc):
                return hist[(a.name, i + a.index.off)]
            if isinstance(a, Sample):
                d = draw[a.name]
                return d if a.proj is None else d[a.proj - 1]
            raise RecurrenceError(f"unexpected atom {a}")

        new = {v: p.evaluate(value) for v, p in rs.updates.items()}
        for v in rs.program.process_vars:
            hist[(v, i)] = new.get(v, hist[(v, i - 1)])
        states.append({v: hist[(v, i)] for v in rs.program.process_vars})
    return states


__all__ = ["RecurrenceError", "RecurrenceSystem", "SeedProcess", "extract_recurrences",
           "lift_seed", "seed_poly", "lower", "lower_guard", "lower_params",
           "build_distribution", "unroll", "And", "Or", "Not", "TimeVar"]
