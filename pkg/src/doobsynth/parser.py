"""Recursive-descent parser and validator for ``.spp`` programs.

See docs/dsl.md for the grammar.  Every failure is a ``ParseError`` carrying a
line and column; no other exception escapes ``parse_program``.
"""

from __future__ import annotations

from fractions import Fraction

from .lexer import ParseError, Token, TokenStream, tokenize
from .syntax import (AT_EXIT, EVERY, IMPLIES, Assign, BernD, BinOp, BoolConst, BoolOp,
                     Cmp, Expr, Guard, Hint, InitAssign, MatchesD, Neg, NotG, Num,
                     ParamDecl, ParamRef, Pos, Pow, Pragmas, ProcRef, Program, Proj,
                     SampleRef, Sampling, TableD, TimeRef, UnifD, Variant)

RESERVED = {"param", "int", "in", "inf", "while", "do", "end", "true", "false", "and", "or",
            "not", "t", "i", "j", "k", "tau", "E", "Pr", "P", "F", "sum", "Bern", "Unif",
            "Matches", "Table"}
RELOPS = ("=", "!=", "<", "<=", ">", ">=")
MAX_POWER = 16
_PENDING = object()


def _pos(t: Token) -> Pos:
    return Pos(t.line, t.col)


class _Scope:
    """Name resolution for one expression context."""

    def __init__(self, prog: _Partial, kind: str, *, assigned=(), allow_t=False,
                 allow_samples=True, allow_procs=True):
        self.prog = prog
        self.kind = kind
        self.assigned = set(assigned)
        self.allow_t = allow_t
        self.allow_samples = allow_samples
        self.allow_procs = allow_procs


class _Partial:
    def __init__(self):
        self.params: dict[str, ParamDecl] = {}
        self.procs: set[str] = set()
        self.samples: dict[str, int | None] = {}  # name -> arity (None for scalars)
        self.m = 0


def parse_program(text: str) -> Program:
    toks = tokenize(text, keep_comments=True)
    comments = [t for t in toks if t.kind == "COMMENT"]
    p = _Parser([t for t in toks if t.kind != "COMMENT"])
    prog = p.program()
    pragmas = _parse_pragmas(comments, prog, p.env)
    return Program(prog.params, prog.init, prog.guard, prog.samples, prog.body, pragmas)


def parse_seed(text: str, program: Program) -> Expr:
    return _expr_from_text(text, program, "seed")


def parse_hints(text: str, program: Program) -> list[Hint]:
    """One hint per non-empty line, each ``scope: formula``."""
    env = _env_of(program)
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if line:
            out.append(_hint(line, env, n))
    return out


def parse_variant(text: str, program: Program) -> Variant:
    return _variant(text, _env_of(program), 0)


def parse_guard(text: str, program: Program, *, allow_t: bool = True) -> Guard:
    env = _env_of(program)
    p = _Parser(_tokens(text, 0))
    p.env = env
    g = p.guard(_Scope(env, "hint", allow_t=allow_t))
    p.ts.expect_kind("EOF", "end of formula")
    return g


# ---------------------------------------------------------------------------

def _tokens(text: str, line: int) -> list[Token]:
    toks = tokenize(text)
    if line:
        toks = [Token(t.kind, t.text, line, t.col) for t in toks]
    return toks


def _env_of(program: Program) -> _Partial:
    env = _Partial()
    env.params = {d.name: d for d in program.params}
    env.procs = set(program.process_vars)
    for s in program.samples:
        env.samples[s.var] = _arity(s.dist)
    env.m = program.init_length
    return env


def _expr_from_text(text: str, program: Program | _Partial, kind: str, line: int = 0) -> Expr:
    env = program if isinstance(program, _Partial) else _env_of(program)
    p = _Parser(_tokens(text, line))
    p.env = env
    if kind == "seed":
        scope = _Scope(env, "seed")
    elif kind == "params":
        scope = _Scope(env, "params", allow_samples=False, allow_procs=False)
    else:
        raise ValueError(kind)
    e = p.expr(scope)
    if p.ts.peek.kind == "OP" and p.ts.peek.text in RELOPS:
        p.ts.error(f"comparison operator {p.ts.peek.text!r} not allowed in a {kind} expression")
    p.ts.expect_kind("EOF", "end of expression")
    return e


def _arity(dist) -> int | None:
    if isinstance(dist, MatchesD):
        return len(dist.pattern)
    if isinstance(dist, TableD) and not dist.scalar:
        return len(dist.rows[0][0])
    return None


class _Parser:
    def __init__(self, toks: list[Token]):
        self.ts = TokenStream(toks)
        self.env = _Partial()

    # program ---------------------------------------------------------------
    def program(self) -> Program:
        ts, env = self.ts, self.env
        params, init = [], []
        while not ts.at("while"):
            t = ts.peek
            if t.kind == "EOF":
                ts.error("expected 'while'")
            if ts.accept("param"):
                params.append(self.param_decl(t))
            else:
                init.append(self.init_assign())
        if not init:
            ts.error("program has no initial assignments")
        self.check_init(init)
        ts.expect("while")
        gstart = ts.peek
        guard = self.guard(_Scope(env, "guard"), allow_implies=False)
        ts.expect("do")
        samples, body = [], []
        assigned: list[str] = []
        while not ts.at("end"):
            t = ts.peek
            if t.kind != "NAME":
                ts.error(f"expected a statement, found {t.text or 'end of input'!r}")
            if ts.ahead().text == "~":
                if body:
                    ts.error("samplings must precede process assignments")
                samples.append(self.sampling())
            elif ts.ahead().text == ":=":
                a = self.assign(assigned)
                body.append(a)
                assigned.append(a.var)
            else:
                ts.error(f"expected ':=' or '~' after {t.text!r}")
        ts.expect("end")
        ts.accept(";")
        ts.expect_kind("EOF", "end of program")
        if not body:
            self.ts.error("loop body has no assignments", gstart)
        self._check_guard_samples(guard, gstart)
        return Program(tuple(params), tuple(init), guard, tuple(samples), tuple(body))

    def _check_guard_samples(self, guard: Guard, tok: Token) -> None:
        def at(n):
            return Token("NAME", "", n.pos.line, n.pos.col) if n.pos.line else tok

        def visit(n):
            if isinstance(n, Proj):
                ar = self.env.samples.get(n.arg.name, _PENDING)
                if ar is _PENDING:
                    self.ts.error(f"undeclared identifier {n.arg.name!r}", at(n))
                if ar is None or not 1 <= n.index <= ar:
                    self.ts.error(f"bad projection pi_{n.index}({n.arg.name})", at(n))
                return
            if isinstance(n, SampleRef):
                ar = self.env.samples.get(n.name, _PENDING)
                if ar is _PENDING:
                    self.ts.error(f"undeclared identifier {n.name!r}", at(n))
                if ar is not None:
                    self.ts.error(f"{n.name!r} is tuple-valued; use pi_k({n.name})", at(n))
            for c in n.children():
                visit(c)

        for e in guard.exprs():
            visit(e)

    def param_decl(self, start: Token) -> ParamDecl:
        ts, env = self.ts, self.env
        nt = ts.expect_kind("NAME", "parameter name")
        name = nt.text
        self.check_fresh(name, nt)
        integral = False
        if ts.accept(":"):
            ts.expect("int")
            integral = True
        lo = hi = None
        lo_c = hi_c = False
        if ts.accept("in"):
            if ts.accept("["):
                lo_c = True
            else:
                ts.expect("(")
            scope = _Scope(env, "params", allow_samples=False, allow_procs=False)
            if ts.at("-") and ts.ahead().text == "inf":
                ts.next(), ts.next()
                if lo_c:
                    ts.error("infinite endpoint must be open")
            else:
                lo = self.expr(scope)
            ts.expect(",")
            if ts.accept("inf"):
                hi = None
                inf_hi = True
            else:
                hi = self.expr(scope)
                inf_hi = False
            if ts.accept("]"):
                if inf_hi:
                    ts.error("infinite endpoint must be open")
                hi_c = True
            else:
                ts.expect(")")
        ts.expect(";")
        d = ParamDecl(name, integral, lo, hi, lo_c, hi_c)
        env.params[name] = d
        return d

    def check_fresh(self, name: str, tok: Token) -> None:
        env = self.env
        if name in RESERVED or (name.startswith("pi_") and name[3:].isdigit()):
            self.ts.error(f"{name!r} is a reserved word", tok)
        if name in env.params or name in env.samples or name in env.procs:
            self.ts.error(f"{name!r} is already declared", tok)

    def init_assign(self) -> InitAssign:
        ts, env = self.ts, self.env
        nt = ts.expect_kind("NAME", "process variable")
        name = nt.text
        if name in RESERVED or name in env.params:
            ts.error(f"cannot assign to {name!r}", nt)
        ts.expect("[")
        it = ts.expect_kind("NUM", "history index (a natural number)")
        ts.expect("]")
        ts.expect(":=")
        e = self.expr(_Scope(env, "init", allow_samples=False, allow_procs=False))
        ts.expect(";")
        env.procs.add(name)
        return InitAssign(name, int(it.text), e, _pos(nt))

    def check_init(self, init: list[InitAssign]) -> None:
        per: dict[str, list[InitAssign]] = {}
        for ia in init:
            per.setdefault(ia.var, []).append(ia)
        lengths = set()
        for var, items in per.items():
            idx = sorted(ia.index for ia in items)
            if len(set(idx)) != len(idx):
                dup = next(ia for ia in items if idx.count(ia.index) > 1)
                self.ts.error(f"{var}[{dup.index}] initialized twice",
                              Token("NAME", var, dup.pos.line, dup.pos.col))
            if idx != list(range(len(idx))):
                ia = items[0]
                self.ts.error(f"initial history of {var} must cover indices 0..{len(idx) - 1}",
                              Token("NAME", var, ia.pos.line, ia.pos.col))
            lengths.add(len(idx))
        if len(lengths) > 1:
            ia = init[0]
            self.ts.error("all process variables need the same number of initial values",
                          Token("NAME", ia.var, ia.pos.line, ia.pos.col))
        self.env.m = lengths.pop()

    def sampling(self) -> Sampling:
        ts, env = self.ts, self.env
        nt = ts.next()
        name = nt.text
        if name in env.procs:
            ts.error(f"{name!r} is a process variable and cannot be sampled", nt)
        self.check_fresh(name, nt)
        ts.expect("~")
        dist = self.distribution()
        if not ts.at("end"):
            ts.expect(";")
        env.samples[name] = _arity(dist)
        return Sampling(name, dist, _pos(nt))

    def assign(self, assigned: list[str]) -> Assign:
        ts, env = self.ts, self.env
        nt = ts.next()
        name = nt.text
        if name in env.samples:
            ts.error(f"sample variable {name!r} cannot be assigned", nt)
        if name not in env.procs:
            ts.error(f"process variable {name!r} has no initial value", nt)
        if name in assigned:
            ts.error(f"{name!r} is assigned twice in one iteration", nt)
        ts.expect(":=")
        e = self.expr(_Scope(env, "body", assigned=assigned))
        if not ts.at("end"):
            ts.expect(";")
        return Assign(name, e, _pos(nt))

    # distributions ---------------------------------------------------------
    def distribution(self):
        ts, env = self.ts, self.env
        t = ts.expect_kind("NAME", "distribution")
        scope = _Scope(env, "params", allow_samples=False, allow_procs=False)
        if t.text == "Bern":
            ts.expect("(")
            p = self.expr(scope)
            ts.expect(",")
            ts.expect("{")
            v1 = self.int_lit()
            ts.expect(",")
            v0 = self.int_lit()
            ts.expect("}")
            ts.expect(")")
            return BernD(p, v1, v0)
        if t.text == "Unif":
            ts.expect("{")
            vals = [self.int_lit()]
            while ts.accept(","):
                vals.append(self.int_lit())
            ts.expect("}")
            if len(set(vals)) != len(vals):
                ts.error("Unif support has duplicate values", t)
            return UnifD(tuple(vals))
        if t.text == "Matches":
            ts.expect("(")
            s = ts.expect_kind("STR", "pattern string").text[1:-1]
            if not s:
                ts.error("empty pattern", t)
            ts.expect(",")
            size = self.expr(scope)
            ts.expect(")")
            return MatchesD(s, size)
        if t.text == "Table":
            ts.expect("{")
            rows = [self.table_row(scope)]
            while ts.accept(","):
                rows.append(self.table_row(scope))
            ts.expect("}")
            scalar = {r[0] is None for r in rows}
            if len(scalar) > 1:
                ts.error("mixed scalar and tuple rows in Table", t)
            if scalar == {True}:
                return TableD(tuple(((v,), p) for _, p, v in rows), scalar=True)
            ar = {len(r[0]) for r in rows}
            if len(ar) > 1:
                ts.error("Table rows have different arities", t)
            pts = [r[0] for r in rows]
            if len(set(pts)) != len(pts):
                ts.error("Table has duplicate support points", t)
            return TableD(tuple((r[0], r[1]) for r in rows))
        ts.error(f"unknown distribution {t.text!r}", t)

    def table_row(self, scope):
        ts = self.ts
        if ts.accept("("):
            pt = [self.int_lit()]
            while ts.accept(","):
                pt.append(self.int_lit())
            ts.expect(")")
            ts.expect("->")
            return tuple(pt), self.expr(scope), None
        v = self.int_lit()
        ts.expect("->")
        return None, self.expr(scope), v

    def int_lit(self) -> int:
        sign = -1 if self.ts.accept("-") else 1
        return sign * int(self.ts.expect_kind("NUM", "integer").text)

    # expressions -------------------------------------------------------------
    def expr(self, sc: _Scope) -> Expr:
        ts = self.ts
        e = self.term(sc)
        while ts.at("+") or ts.at("-"):
            t = ts.next()
            e = BinOp(t.text, e, self.term(sc), _pos(t))
        return e

    def term(self, sc: _Scope) -> Expr:
        ts = self.ts
        e = self.unary(sc)
        while ts.at("*") or ts.at("/"):
            t = ts.next()
            r = self.unary(sc)
            if t.text == "/":
                if not all(isinstance(n, (Num, ParamRef, BinOp, Neg, Pow)) for n in r.walk()):
                    ts.error("divisors may only contain numbers and parameters", t)
                if _const_value(r) == 0:
                    ts.error("division by zero", t)
            e = BinOp(t.text, e, r, _pos(t))
        return e

    def unary(self, sc: _Scope) -> Expr:
        t = self.ts.peek
        if self.ts.accept("-"):
            return Neg(self.unary(sc), _pos(t))
        return self.power(sc)

    def power(self, sc: _Scope) -> Expr:
        e = self.primary(sc)
        t = self.ts.peek
        if self.ts.accept("^"):
            n = int(self.ts.expect_kind("NUM", "natural exponent").text)
            if n > MAX_POWER:
                self.ts.error(f"exponent {n} exceeds {MAX_POWER}", t)
            e = Pow(e, n, _pos(t))
        return e

    def primary(self, sc: _Scope) -> Expr:
        ts, env = self.ts, self.env
        t = ts.peek
        if t.kind == "NUM":
            ts.next()
            return Num(int(t.text), _pos(t))
        if ts.accept("("):
            e = self.expr(sc)
            ts.expect(")")
            return e
        if t.kind != "NAME" or t.text in RESERVED - {"t"}:
            ts.error(f"unexpected {t.text or 'end of input'!r}")
        name = ts.next().text
        if name.startswith("pi_") and name[3:].isdigit():
            k = int(name[3:])
            ts.expect("(")
            st = ts.expect_kind("NAME", "sample variable")
            ts.expect(")")
            ar = self.sample_arity(st, sc)
            if ar is _PENDING:
                return Proj(k, SampleRef(st.text, _pos(st)), _pos(t))
            if ar is None:
                ts.error(f"{st.text!r} is scalar and cannot be projected", st)
            if not 1 <= k <= ar:
                ts.error(f"projection pi_{k} outside arity {ar} of {st.text!r}", t)
            return Proj(k, SampleRef(st.text, _pos(st)), _pos(t))
        if name == "t":
            if not sc.allow_t:
                ts.error("the loop counter t is only allowed in at-exit hints", t)
            return TimeRef(_pos(t))
        if ts.at("["):
            ts.next()
            if name not in env.procs:
                ts.error(f"history reference to unknown process variable {name!r}", t)
            if sc.kind == "init":
                ts.error("initial values may not reference process variables", t)
            ts.expect("-")
            n = int(ts.expect_kind("NUM", "history offset").text)
            ts.expect("]")
            if n < 1:
                ts.error("history offsets must be at least 1", t)
            limit = env.m if sc.kind == "body" else env.m - 1
            if n > limit:
                ts.error(f"history depth exceeds init: {name}[-{n}] needs {n + (sc.kind != 'body')} "
                         f"initial values, found {env.m}", t)
            return ProcRef(name, -n, _pos(t))
        if name in env.params:
            return ParamRef(name, _pos(t))
        if name in env.samples:
            ar = self.sample_arity(t, sc)
            if ar is not None:
                ts.error(f"{name!r} is tuple-valued; use pi_k({name})", t)
            return SampleRef(name, _pos(t))
        if name in env.procs:
            if not sc.allow_procs:
                ts.error(f"process variable {name!r} not allowed here", t)
            if sc.kind == "body" and name not in sc.assigned:
                return ProcRef(name, -1, _pos(t))
            return ProcRef(name, 0, _pos(t))
        if sc.kind == "guard":
            # resolved against the body's samplings once they are parsed
            return SampleRef(name, _pos(t))
        ts.error(f"undeclared identifier {name!r}", t)

    def sample_arity(self, tok: Token, sc: _Scope):
        env = self.env
        if tok.text not in env.samples:
            if sc.kind == "guard":
                return _PENDING
            self.ts.error(f"undeclared identifier {tok.text!r}", tok)
        if not sc.allow_samples:
            self.ts.error(f"sample variable {tok.text!r} not allowed here", tok)
        return env.samples[tok.text]

    # guards ----------------------------------------------------------------
    def guard(self, sc: _Scope, allow_implies: bool = True) -> Guard:
        g = self.disj(sc)
        if allow_implies and self.ts.accept("->"):
            return BoolOp("->", (g, self.guard(sc)))
        return g

    def disj(self, sc) -> Guard:
        items = [self.conj(sc)]
        while self.ts.accept("\\/") or self.ts.accept("or"):
            items.append(self.conj(sc))
        return items[0] if len(items) == 1 else BoolOp("or", tuple(items))

    def conj(self, sc) -> Guard:
        items = [self.neg(sc)]
        while self.ts.accept("/\\") or self.ts.accept("and"):
            items.append(self.neg(sc))
        return items[0] if len(items) == 1 else BoolOp("and", tuple(items))

    def neg(self, sc) -> Guard:
        if self.ts.accept("not"):
            return NotG(self.neg(sc))
        return self.atomic(sc)

    def atomic(self, sc) -> Guard:
        ts = self.ts
        if ts.accept("true"):
            return BoolConst(True)
        if ts.accept("false"):
            return BoolConst(False)
        if ts.at("("):
            save = ts.pos
            try:
                return self.cmp(sc)
            except ParseError:
                ts.pos = save
            ts.next()
            g = self.guard(sc)
            ts.expect(")")
            return g
        return self.cmp(sc)

    def cmp(self, sc) -> Guard:
        ts = self.ts
        args = [self.expr(sc)]
        ops = []
        while ts.peek.kind == "OP" and ts.peek.text in RELOPS:
            ops.append(ts.next().text)
            args.append(self.expr(sc))
        if not ops:
            ts.error("expected a comparison")
        return Cmp(tuple(ops), tuple(args))


def _const_value(e: Expr) -> Fraction | None:
    if isinstance(e, Num):
        return Fraction(e.value)
    if isinstance(e, Neg):
        v = _const_value(e.arg)
        return None if v is None else -v
    if isinstance(e, Pow):
        v = _const_value(e.base)
        return None if v is None else v ** e.exp
    if isinstance(e, BinOp):
        a, b = _const_value(e.left), _const_value(e.right)
        if a is None or b is None:
            return None
        if e.op == "/":
            return a / b if b else None
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    return None


# pragmas -------------------------------------------------------------------

PRAGMAS = ("seed", "hint", "solve-for", "variant", "use-fact", "assume-ost", "sim")


def _parse_pragmas(comments: list[Token], prog: Program, env: _Partial) -> Pragmas:
    seed = None
    hints: list[Hint] = []
    solve = variant = None
    facts: list[str] = []
    assume = False
    sim: list = []
    for c in comments:
        if c.text[1:2].isspace():
            continue  # plain comment
        body = c.text[1:].strip()
        head, _, rest = body.partition(":")
        head = head.strip()
        key = head.split()[0] if head else ""
        if key not in PRAGMAS:
            continue
        rest = rest.strip()
        line = c.line
        if key == "seed":
            if seed is not None:
                raise ParseError("duplicate #seed pragma", line, c.col)
            seed = _expr_from_text(rest, env, "seed", line)
        elif key == "hint":
            scope = head[len("hint"):].strip()
            hints.append(_hint(f"{scope}: {rest}", env, line))
        elif key == "solve-for":
            solve = rest
        elif key == "variant":
            variant = _variant(rest, env, line)
        elif key == "use-fact":
            facts.append(rest)
        elif key == "assume-ost":
            assume = True
        elif key == "sim":
            sim.extend(_sim_params(rest, env, line))
    return Pragmas(seed, tuple(hints), solve, variant, tuple(facts), assume, tuple(sim))


def _hint(text: str, env: _Partial, line: int) -> Hint:
    scope, sep, rest = text.partition(":")
    scope = scope.strip()
    if not sep or scope not in (AT_EXIT, EVERY, IMPLIES):
        raise ParseError(f"hint must start with 'at-exit:', 'every:' or 'implies:', got {text!r}",
                         line, 1)
    p = _Parser(_tokens(rest, line))
    p.env = env
    g = p.guard(_Scope(env, "hint", allow_t=scope != EVERY))
    p.ts.expect_kind("EOF", "end of hint")
    if scope == IMPLIES and not (isinstance(g, BoolOp) and g.op == "->"):
        raise ParseError("implication hints need the form 'A -> B'", line, 1)
    return Hint(scope, g)


def _variant(text: str, env: _Partial, line: int) -> Variant:
    p = _Parser(_tokens(text, line))
    p.env = env
    v = p.expr(_Scope(env, "seed"))
    bound = eps = None
    pscope = _Scope(env, "params", allow_samples=False, allow_procs=False)
    if p.ts.accept(","):
        bound = p.expr(pscope)
        if p.ts.accept(","):
            eps = p.expr(pscope)
    p.ts.expect_kind("EOF", "end of variant")
    return Variant(v, bound, eps)


def _sim_params(text: str, env: _Partial, line: int) -> list:
    out = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, eq, val = part.partition("=")
        name = name.strip()
        if not eq or name not in env.params:
            raise ParseError(f"bad #sim binding {part!r}", line, 1)
        try:
            out.append((name, Fraction(val.strip())))
        except ValueError:
            raise ParseError(f"bad value in #sim binding {part!r}", line, 1) from None
    return out
