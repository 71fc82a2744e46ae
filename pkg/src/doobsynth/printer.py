"""Canonical pretty-printer for programs; ``parse_program(show_program(p)) == p``."""

from __future__ import annotations

from .syntax import (BernD, BinOp, BoolConst, BoolOp, Cmp, Expr, Guard, Hint, MatchesD, Neg,
                     NotG, Num, ParamDecl, ParamRef, Pow, ProcRef, Program, Proj, SampleRef,
                     TableD, TimeRef, UnifD, Variant)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def show_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, (ParamRef, SampleRef)):
        return e.name
    if isinstance(e, TimeRef):
        return "t"
    if isinstance(e, ProcRef):
        return e.name if e.offset == 0 else f"{e.name}[{e.offset}]"
    if isinstance(e, Proj):
        return f"pi_{e.index}({e.arg.name})"
    if isinstance(e, Neg):
        s = "-" + show_expr(e.arg, 3)
        return f"({s})" if prec > 2 else s
    if isinstance(e, Pow):
        return f"{show_expr(e.base, 4)}^{e.exp}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        op = "/" if e.op == "/" else f" {e.op} "
        s = f"{show_expr(e.left, p)}{op}{show_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    raise TypeError(e)


def show_guard(g: Guard, prec: int = 0) -> str:
    if isinstance(g, BoolConst):
        return "true" if g.value else "false"
    if isinstance(g, Cmp):
        parts = [show_expr(g.args[0])]
        for op, a in zip(g.ops, g.args[1:]):
            parts += [op, show_expr(a)]
        return " ".join(parts)
    if isinstance(g, NotG):
        return "not " + show_guard(g.arg, 4)
    if isinstance(g, BoolOp):
        p, sym = {"->": (1, "->"), "or": (2, "\\/"), "and": (3, "/\\")}[g.op]
        if g.op == "->":
            s = f"{show_guard(g.items[0], 2)} -> {show_guard(g.items[1], 1)}"
        else:
            s = f" {sym} ".join(show_guard(x, p + 1) for x in g.items)
        return f"({s})" if p < prec else s
    raise TypeError(g)


def show_dist(d) -> str:
    if isinstance(d, BernD):
        return f"Bern({show_expr(d.prob)}, {{{d.v1}, {d.v0}}})"
    if isinstance(d, UnifD):
        return "Unif{" + ", ".join(map(str, d.values)) + "}"
    if isinstance(d, MatchesD):
        return f'Matches("{d.pattern}", {show_expr(d.size)})'
    if isinstance(d, TableD):
        if d.scalar:
            rows = [f"{pt[0]} -> {show_expr(pr)}" for pt, pr in d.rows]
        else:
            rows = [f"({', '.join(map(str, pt))}) -> {show_expr(pr)}" for pt, pr in d.rows]
        return "Table{" + ", ".join(rows) + "}"
    raise TypeError(d)


def show_param(d: ParamDecl) -> str:
    s = f"param {d.name}"
    if d.integral:
        s += " : int"
    if d.lo is not None or d.hi is not None:
        lo = show_expr(d.lo) if d.lo is not None else "-inf"
        hi = show_expr(d.hi) if d.hi is not None else "inf"
        s += f" in {'[' if d.lo_closed else '('}{lo}, {hi}{']' if d.hi_closed else ')'}"
    return s + ";"


def show_hint(h: Hint) -> str:
    return f"{h.scope}: {show_guard(h.formula)}"


def show_variant(v: Variant) -> str:
    parts = [show_expr(v.expr)]
    if v.bound is not None:
        parts.append(show_expr(v.bound))
        if v.eps is not None:
            parts.append(show_expr(v.eps))
    return ", ".join(parts)


def show_program(p: Program) -> str:
    lines = [show_param(d) for d in p.params]
    lines += [f"{ia.var}[{ia.index}] := {show_expr(ia.expr)};" for ia in p.init]
    lines.append(f"while {show_guard(p.guard)} do")
    lines += [f"  {s.var} ~ {show_dist(s.dist)};" for s in p.samples]
    lines += [f"  {a.var} := {show_expr(a.expr)};" for a in p.body]
    lines.append("end")
    pr = p.pragmas
    if pr.seed is not None:
        lines.append(f"#seed: {show_expr(pr.seed)}")
    for h in pr.hints:
        lines.append(f"#hint {show_hint(h)}")
    if pr.variant is not None:
        lines.append(f"#variant: {show_variant(pr.variant)}")
    if pr.solve_for is not None:
        lines.append(f"#solve-for: {pr.solve_for}")
    for f in pr.use_facts:
        lines.append(f"#use-fact: {f}")
    if pr.assume_ost:
        lines.append("#assume-ost")
    if pr.sim_params:
        lines.append("#sim: " + ", ".join(f"{n}={v}" for n, v in pr.sim_params))
    return "\n".join(lines) + "\n"
