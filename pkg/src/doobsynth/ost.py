"""Optional stopping: side conditions, the terminal fact, hints, and solving.

Pipeline: :func:`check_side_conditions` -> :func:`apply_ost` (raw fact
``M_0 = E[M_tau]``) -> :func:`apply_hints` -> :func:`solve_for`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .doob import MartingaleForm
from .intervals import (HEAD, Interval, ParamContext, StateRanges, abs_bound, eval_interval,
                        guard_formula, guarded_ranges, loop_invariant, outcomes, refine)
from .recurrence import RecurrenceSystem, SeedProcess, lower, lower_guard, lower_params
from .rules import EXPECT_RULES
from .symbolic.expr import (And, Atom, Expect, Formula, Index, Indicator, Or, Param, Poly, Proc,
                            Rel, Sample, SumAtom, SymbolicError, TimeVar, Truth, conj)
from .symbolic.parse import parse_closed_form, parse_symexpr
from .symbolic.ratfunc import RatFunc
from .symbolic.rewrite import rewrite_fixpoint
from .symbolic.sums import peel_last, simplify_sum
from .syntax import AT_EXIT, EVERY, IMPLIES, BoolOp, Hint, Variant

TAU = Index("tau", 0)
ENUM_CAP = 20000


class OSTError(ValueError):
    """Hint conflicts, unsolvable targets and malformed fact files."""


class OSTRefused(OSTError):
    """Side conditions neither verified nor assumed."""


# side conditions -------------------------------------------------------------

@dataclass
class Condition:
    name: str
    verified: bool
    detail: str
    bound: Poly | None = None        # increments: |M_i - M_{i-1}| <= bound
    seed_bound: Poly | None = None   # increments: |E_i| <= seed_bound when known
    variant: tuple | None = None     # (v, K, eps) as printed strings

    @property
    def status(self) -> str:
        return "verified" if self.verified else "obligation"


@dataclass
class SideConditionReport:
    bounded_increments: Condition
    expected_time_finite: Condition
    assumed: bool = False

    @property
    def conditions(self) -> list[Condition]:
        return [self.bounded_increments, self.expected_time_finite]

    @property
    def obligations(self) -> list[Condition]:
        return [c for c in self.conditions if not c.verified]

    @property
    def ok(self) -> bool:
        return not self.obligations


def _hint_formula(rs: RecurrenceSystem, h: Hint, ix: Index, tau: Poly | None = None) -> Formula:
    def proc(name, off):
        if name in rs.constants:
            return rs.constants[name]
        return Poly.atom(Proc(name, ix + off))

    def sample(name, proj):
        return Poly.atom(Sample(name, ix, proj))

    return lower_guard(h.formula, proc=proc, sample=sample, t=tau)


def invariant_ranges(rs: RecurrenceSystem, ctx: ParamContext) -> StateRanges:
    """Loop-head invariant over all reachable states, exit states included."""
    return loop_invariant(rs, ctx)


def pre_state_ranges(rs: RecurrenceSystem, st: StateRanges, ctx: ParamContext,
                     hints: Iterable[Hint] = ()) -> dict:
    """Ranges where an iteration starts: guard and every-iteration hints hold."""
    pre = guarded_ranges(rs, st, ctx)
    every = [h for h in hints if h.scope == EVERY]
    if every:
        pre = refine(pre, conj([_hint_formula(rs, h, HEAD) for h in every]), st.integral, ctx)
    return pre


def _pre_ranges(rs, st, ctx, hints):
    """Atom ranges for one iteration: state at i-1 is a pre-state, older lags any state."""
    pre = pre_state_ranges(rs, st, ctx, hints)

    def rng(a: Atom) -> Interval:
        if isinstance(a, Proc) and a.index.sym == "i":
            if a.index.off == -1:
                return pre.get(a.name, Interval.top())
            return st.procs.get(a.name, Interval.top())
        if isinstance(a, Sample) and a.index.sym == "i":
            key = (a.name, a.proj)
            if a.index.off == -1:
                return pre.get(key, Interval.top())
            return st.samples.get(key, Interval.top())
        return Interval.top()

    return rng


def triangle_bound(p: Poly, rng, ctx: ParamContext) -> Poly | None:
    """sum |c_m| * prod |atom|^e, a crude but always finite-when-possible bound."""
    total = Poly.zero()
    for mono, c in p.items():
        t = Poly.const(abs(c))
        for a, e in mono:
            if isinstance(a, Param):
                pa = Poly.atom(a, e)
                if ctx.nonneg(pa):
                    t = t * pa
                elif ctx.nonpos(pa):
                    t = t * -pa
                else:
                    return None
                continue
            b = abs_bound(rng(a), ctx)
            if b is None:
                return None
            t = t * b ** e
        total = total + t
    return total


def check_bounded_increments(rs: RecurrenceSystem, sp: SeedProcess, mf: MartingaleForm,
                             ctx: ParamContext, st: StateRanges, hints=()) -> Condition:
    name = "bounded increments"

    def head(a):
        if isinstance(a, Proc):
            return st.procs.get(a.name, Interval.top())
        if isinstance(a, Sample):
            return st.samples.get((a.name, a.proj), Interval.top())
        return Interval.top()

    seed_iv = eval_interval(sp.E, head, ctx)
    c = abs_bound(seed_iv, ctx)
    if c is not None:
        return Condition(name, True, f"|E_i| <= {c} on the loop invariant, so "
                         f"|M_i - M_(i-1)| <= {2 * c}", bound=2 * c, seed_bound=c)
    # increment level: unroll one step and bound monomial-wise over the support
    d = mf.increment.subs(rs.unroll_map(Index("i", 0)))
    b = triangle_bound(d, _pre_ranges(rs, st, ctx, hints), ctx)
    if b is not None:
        return Condition(name, True, f"E_i is unbounded but |M_i - M_(i-1)| = |{d}| <= {b}",
                         bound=b)
    return Condition(name, False, f"cannot bound |M_i - M_(i-1)| = |{d}|")


def _variant_poly(rs: RecurrenceSystem, v) -> Poly:
    def proc(name, off):
        if name in rs.constants:
            return rs.constants[name]
        return Poly.atom(Proc(name, Index("i", off)))

    def sample(name, proj):
        return Poly.atom(Sample(name, Index("i", 0), proj))

    return lower(v, proc, sample)


def check_bounded_variant(rs: RecurrenceSystem, variant: Variant | None, ctx: ParamContext,
                          st: StateRanges, hints=()) -> Condition:
    name = "finite expected stopping time"
    if variant is None:
        return Condition(name, False, "no bounded variant supplied")
    v = _variant_poly(rs, variant.expr)
    K = RatFunc.lift(lower_params(variant.bound)) if variant.bound is not None else None
    eps = RatFunc.lift(lower_params(variant.eps)) if variant.eps is not None else None
    res = _variant_by_intervals(rs, v, K, eps, ctx, st, hints)
    if not res.verified:
        alt = _variant_by_enumeration(rs, v, K, eps, ctx)
        if alt is not None and alt.verified:
            return alt
    return res


def _as_poly(r: RatFunc | None) -> Poly | None:
    if r is None:
        return None
    try:
        return r.as_poly()
    except SymbolicError:
        return None


def _rat_positive(r: RatFunc, ctx: ParamContext) -> bool:
    # den is normalized with positive leading term but may still change sign
    if ctx.positive(r.den):
        return ctx.positive(r.num)
    if ctx.negative(r.den):
        return ctx.negative(r.num)
    return False


def _eps_ok(prob: Poly, eps: RatFunc | None, ctx: ParamContext) -> tuple[bool, RatFunc]:
    if eps is None:
        return ctx.positive(prob), RatFunc(prob)
    gap = RatFunc(prob) - eps
    ok = _rat_positive(eps, ctx) and (gap.is_zero() or _rat_positive(gap, ctx)
                                      or ctx.nonneg(_as_poly(gap) or Poly.const(-1)))
    return ok, eps


def _variant_by_intervals(rs, v, K, eps, ctx, st, hints) -> Condition:
    name = "finite expected stopping time"
    rng = _pre_ranges(rs, st, ctx, hints)
    v_pre = v.reindex("i", Index("i", -1))
    v_post = v.subs(rs.unroll_map(Index("i", 0)))
    iv = eval_interval(v_pre, rng, ctx)
    problems = []
    # (a) 0 <= v < K on pre-states
    if iv.lo is None or not ctx.nonneg(iv.lo):
        problems.append(f"cannot show {v} >= 0 while the guard holds")
    Kp = _as_poly(K)
    if Kp is None:
        if iv.hi is not None:
            Kp = iv.hi + 1
        else:
            problems.append(f"cannot bound {v} above")
    elif iv.hi is None or not ctx.positive(Kp - iv.hi):
        problems.append(f"cannot show {v} < {Kp}")
    # (b) v = 0 only outside the guard
    if iv.lo is None or not ctx.positive(iv.lo):
        problems.append(f"cannot show {v} > 0 while the guard holds")
    # (c) decrease probability
    prob = Poly.zero()
    for vals, pr in outcomes(rs):
        def at(a, vals=vals):
            if isinstance(a, Sample) and a.index == Index("i", 0):
                pt = vals[a.name]
                return Interval.point(pt[(a.proj or 1) - 1])
            return rng(a)
        diff = eval_interval(v_post - v_pre, at, ctx)
        if diff.hi is not None and ctx.negative(diff.hi):
            prob = prob + pr
    ok, eps_used = _eps_ok(prob, eps, ctx)
    if not ok:
        problems.append(f"decrease probability {prob} not shown to exceed "
                        f"{eps if eps is not None else 0}")
    spec = (str(v), str(Kp) if Kp is not None else "?", str(eps_used))
    if problems:
        return Condition(name, False, "; ".join(problems), variant=spec)
    return Condition(name, True, f"variant {v} in [0, {Kp}), positive under the guard, "
                     f"decreases with probability {prob} >= {eps_used}", variant=spec)


def _variant_by_enumeration(rs, v, K, eps, ctx) -> Condition | None:
    """Exhaustive check over reachable states when all values are concrete."""
    name = "finite expected stopping time"
    if any(not p.is_const() for p in rs.init.values()):
        return None
    if any(not upd.is_params_only() and any(isinstance(a, Param) for a in upd.all_atoms())
           for upd in rs.updates.values()):
        return None
    depth = max(1, max(rs.depth.values(), default=1))
    names = rs.program.process_vars
    samples = list(rs.dists)

    # state: (history tuples per var, oldest first), last draw per sample or None
    hist0 = tuple(tuple(rs.init[(x, k)].const_value() for k in range(rs.m - depth, rs.m))
                  for x in names) if rs.m >= depth else None
    if hist0 is None:
        return None

    def val_fn(state, ix_sym_off_cur):
        hist, draw = state

        def value(a):
            if isinstance(a, Proc):
                h = hist[names.index(a.name)]
                return h[len(h) - 1 + a.index.off - ix_sym_off_cur]
            if isinstance(a, Sample):
                d = draw.get(a.name)
                if d is None:
                    raise KeyError(a.name)
                return d[(a.proj or 1) - 1]
            raise KeyError(a)
        return value

    def guard_holds(state):
        g = guard_formula(rs, Index("h", 0))
        f = g.map_polys(lambda p: Poly.const(p.evaluate(val_fn(state, 0))))
        return _truth(f)

    def step(state, pts):
        hist, _ = state
        draw = dict(pts)
        env = {}
        for x, upd in rs.updates.items():
            def value(a, x=x):
                if isinstance(a, Proc):
                    h = hist[names.index(a.name)]
                    return h[len(h) + a.index.off]
                if isinstance(a, Sample):
                    return draw[a.name][(a.proj or 1) - 1]
                raise KeyError(a)
            env[x] = upd.evaluate(value)
        new_hist = tuple(h[1:] + (env.get(x, h[-1]),) for x, h in zip(names, hist))
        return (new_hist, tuple(sorted(draw.items())))

    def v_at(state):
        hist, draw = state
        d = dict(draw)

        def value(a):
            if isinstance(a, Proc):
                h = hist[names.index(a.name)]
                return Poly.const(h[len(h) - 1 + a.index.off])
            if isinstance(a, Sample):
                if a.name not in d:
                    raise KeyError(a.name)
                return Poly.const(d[a.name][(a.proj or 1) - 1])
            return None
        return v.map_atoms(value)

    start = (hist0, ())
    seen = {start}
    queue = deque([start])
    min_prob = None
    Kp = _as_poly(K)
    worst_v = None
    try:
        while queue:
            s = queue.popleft()
            hist, draw = s
            st_view = (hist, dict(draw))
            try:
                holds = guard_holds(st_view)
            except KeyError:
                return None  # guard reads a sample before any draw
            if holds is None:
                return None
            if not holds:
                continue
            vs = v_at(s)
            if not vs.is_params_only():
                return None
            if not ctx.positive(vs):
                return Condition(name, False, f"variant {v} is not positive in a reachable "
                                 "state where the guard holds")
            if Kp is not None and not ctx.positive(Kp - vs):
                return Condition(name, False, f"variant {v} reaches {vs} >= {Kp}")
            worst_v = vs if worst_v is None else worst_v
            prob = Poly.zero()
            for vals, pr in outcomes(rs):
                nxt = step(s, vals)
                if ctx.negative(v_at(nxt) - vs):
                    prob = prob + pr
                if nxt not in seen:
                    seen.add(nxt)
                    if len(seen) > ENUM_CAP:
                        return None
                    queue.append(nxt)
            if min_prob is None or ctx.le(prob, min_prob) is True:
                min_prob = prob
            elif ctx.le(min_prob, prob) is not True:
                return None
    except KeyError:
        return None
    if min_prob is None:
        return None
    ok, eps_used = _eps_ok(min_prob, eps, ctx)
    k_text = str(Kp) if Kp is not None else "?"
    spec = (str(v), k_text, str(eps_used))
    if not ok:
        return Condition(name, False, f"decrease probability {min_prob} not shown to exceed "
                         f"{eps_used}", variant=spec)
    if Kp is None:
        return Condition(name, False, "no variant bound K given for the enumerated state space",
                         variant=spec)
    return Condition(name, True, f"variant {v} checked on {len(seen)} reachable states: in "
                     f"[0, {Kp}), positive under the guard, decreases with probability >= "
                     f"{eps_used}", variant=spec)


def _truth(f: Formula) -> bool | None:
    if isinstance(f, Truth):
        return f.value
    return None


def check_side_conditions(rs: RecurrenceSystem, sp: SeedProcess, mf: MartingaleForm,
                          ctx: ParamContext, variant: Variant | None, hints=()) -> SideConditionReport:
    st = invariant_ranges(rs, ctx)
    inc = check_bounded_increments(rs, sp, mf, ctx, st, hints)
    fin = check_bounded_variant(rs, variant, ctx, st, hints)
    return SideConditionReport(inc, fin)


# facts -------------------------------------------------------------------------

RAW, HINTED, SOLVED, RESIDUAL = "raw", "hint-simplified", "solved", "residual"


@dataclass
class Fact:
    lhs: Poly
    rhs: Poly
    status: str = RAW
    target: Poly | None = None
    closed_form: RatFunc | Poly | None = None
    unknowns: tuple = ()

    def __str__(self):
        if self.status == SOLVED and self.closed_form is not None:
            return f"{self.target} = {self.closed_form}"
        return f"{self.lhs} = {self.rhs}"

    @property
    def equation(self) -> Poly:
        return self.lhs - self.rhs


def apply_ost(mf: MartingaleForm, sc: SideConditionReport, assume: bool = False) -> Fact:
    if not sc.ok and not assume:
        raise OSTRefused("optional stopping refused; unproven side conditions: "
                         + "; ".join(f"{c.name}: {c.detail}" for c in sc.obligations))
    sc.assumed = not sc.ok
    rhs = mf.M.reindex("i", TAU)
    return Fact(mf.M0, Poly.atom(Expect(rhs)), RAW)


@dataclass
class HintSteps:
    """Intermediate facts of hint simplification, all of the form lhs = rhs."""
    steps: list = field(default_factory=list)  # (label, Fact)

    def add(self, label, fact):
        self.steps.append((label, fact))


def _solve_atom(rel: Rel, pick) -> tuple[Atom, Poly] | None:
    """Solve a linear equation for one atom chosen by ``pick``."""
    for mono, c in rel.poly.items():
        if len(mono) == 1 and mono[0][1] == 1 and pick(mono[0][0]):
            a = mono[0][0]
            if rel.poly.degree_in(lambda b: b == a) != 1:
                continue
            rest = rel.poly - Poly({mono: c})
            return a, rest * Fraction(-1, 1) * (1 / c)
    return None


def _equalities(f: Formula) -> list[Rel] | None:
    """Conjunction of equalities, else None."""
    items = f.items if isinstance(f, And) else (f,)
    if all(isinstance(r, Rel) and r.op == "=" for r in items):
        return list(items)
    return None


def _at_exit(a: Atom) -> bool:
    return isinstance(a, Proc) and a.index.sym == "tau"


def _bindings_from(rels: list[Rel], known: dict) -> dict:
    out = dict(known)
    for r in rels:
        r2 = r.map_polys(lambda p: p.subs(out)) if out else r
        if isinstance(r2, Truth):
            if not r2.value:
                raise OSTError(f"hint {r} contradicts another hint")
            continue
        s = _solve_atom(r2, _at_exit)
        if s is None:
            s = _solve_atom(r2, lambda a: isinstance(a, Proc))
        if s is None:
            continue
        a, val = s
        out = {k: v.subs({a: val}) for k, v in out.items()}
        out[a] = val
    return out


def _entailed(f: Formula, bindings: dict) -> bool:
    g = f.map_polys(lambda p: p.subs(bindings))
    return isinstance(g, Truth) and g.value


def apply_hints(fact: Fact, rs: RecurrenceSystem, hints: Iterable[Hint], ctx: ParamContext
                ) -> tuple[Fact, HintSteps]:
    hints = list(hints)
    steps = HintSteps()
    body = fact.rhs.single_atom().body if isinstance(fact.rhs.single_atom(), Expect) else None
    if body is None:
        raise OSTError("apply_hints expects a raw fact lhs = E[...]")
    tau = Poly.atom(TimeVar("tau"))
    body = body.subs(rs.init_bindings())

    # every-iteration hints inside sums and at earlier indices
    every = []
    for h in (h for h in hints if h.scope == EVERY):
        f = _hint_formula(rs, h, Index("j", 0))
        rels = _equalities(f)
        if rels:
            every.append(rels)
    if every:
        body = _apply_every(body, every, rs)

    # at-exit: equalities, implications, disjunctions
    exit_eqs: list[Rel] = []
    disjunctions: list[list[list[Rel]]] = []
    for h in (h for h in hints if h.scope == AT_EXIT):
        f = _hint_formula(rs, h, TAU, tau)
        eqs = _equalities(f)
        if eqs is not None:
            exit_eqs += eqs
        elif isinstance(f, Or):
            cases = [_equalities(c) for c in f.items]
            if all(c is not None for c in cases):
                disjunctions.append(cases)
    implications = []
    for h in (h for h in hints if h.scope == IMPLIES):
        g = h.formula
        if isinstance(g, BoolOp) and g.op == "->":
            a = _hint_formula(rs, Hint(h.scope, g.items[0]), TAU, tau)
            b = _hint_formula(rs, Hint(h.scope, g.items[1]), TAU, tau)
            implications.append((a, b))

    bindings = _chain(_bindings_from(exit_eqs, {}), implications)
    body = simplify_sum(body.subs(bindings))
    steps.add("hints", Fact(fact.lhs, Poly.atom(Expect(body)), HINTED))

    rhs = rewrite_fixpoint(Poly.atom(Expect(body)), EXPECT_RULES)
    for cases in disjunctions:
        rhs = _case_split(rhs, cases, bindings, implications, ctx)
    rhs = rewrite_fixpoint(rhs, EXPECT_RULES)
    lhs = fact.lhs
    # collect constants on the lhs so the fact reads "params = unknowns"
    var, const = rhs.split_constant_part()
    if not var.is_zero():
        lhs, rhs = lhs - const, var
        if next(iter(rhs.items()))[1] < 0:
            lhs, rhs = -lhs, -rhs
    out = Fact(lhs, rhs, HINTED)
    steps.add("linearity", out)
    return out, steps


def _chain(bindings: dict, implications) -> dict:
    changed = True
    used = set()
    while changed:
        changed = False
        for n, (a, b) in enumerate(implications):
            if n in used or not _entailed(a, bindings):
                continue
            eqs = _equalities(b)
            if eqs is None:
                continue
            for r in eqs:
                r2 = r.map_polys(lambda p: p.subs(bindings))
                if isinstance(r2, Truth) and not r2.value:
                    raise OSTError(f"implication hint {a} -> {b} contradicts the exit hints")
            bindings = _bindings_from(eqs, bindings)
            used.add(n)
            changed = True
    return bindings


def _apply_every(body: Poly, every: list[list[Rel]], rs) -> Poly:
    """Substitute every-iteration equalities at indices strictly before exit."""

    def in_sum(a: SumAtom) -> Poly | None:
        if a.hi == TAU:
            return peel_last(a).map_atoms(lambda b: in_sum(b) if isinstance(b, SumAtom) else None)
        c = a.hi.compare(TAU)
        if c is None or c >= 0:
            return None
        sub = {}
        for rels in every:
            for r in rels:
                s = _solve_atom(r, lambda x: isinstance(x, Proc) and x.index == Index("j", 0))
                if s:
                    sub[s[0]] = s[1]
        if not sub:
            return None
        # hints are stated at "j"; rename to the sum's bound variable
        sub = {Proc(k.name, Index(a.var, 0)): v.reindex("j", Index(a.var, 0))
               for k, v in sub.items()}
        new_body = a.body.subs(sub)
        if new_body == a.body:
            return None
        return Poly.atom(SumAtom(a.var, a.lo, a.hi, new_body))

    out = body.map_atoms(lambda b: in_sum(b) if isinstance(b, SumAtom) else None)
    return simplify_sum(out)


def _case_split(rhs: Poly, cases: list[list[Rel]], bindings, implications, ctx) -> Poly:
    atoms = set()
    for rels in cases:
        for r in rels:
            atoms |= {a for a in r.poly.atoms() if _at_exit(a)}
    # disjointness: some atom gets provably different values in every pair of cases
    vals = []
    for rels in cases:
        b = _bindings_from(rels, {})
        vals.append(b)
    for x in range(len(vals)):
        for y in range(x + 1, len(vals)):
            if not any(a in vals[x] and a in vals[y] and vals[x][a].is_params_only()
                       and ctx.nonzero(vals[x][a] - vals[y][a]) for a in atoms):
                return rhs

    def split(a: Atom) -> Poly | None:
        if not isinstance(a, Expect):
            return None
        if not (a.body.atoms() & atoms):
            return None
        out = Poly.zero()
        for rels in cases:
            b = _chain(_bindings_from(rels, bindings), implications)
            ev = conj(rels)
            inner = a.body.subs(b)
            out = out + Poly.atom(Expect(inner * Poly.atom(Indicator(ev))))
        return out

    return rhs.map_atoms(split)


# solving ----------------------------------------------------------------------------

def _unknowns(p: Poly) -> list[Atom]:
    return sorted((a for a in p.atoms() if not isinstance(a, Param)), key=lambda a: a.sort_key)


def _affine(eq: Poly) -> dict | None:
    """{unknown or None: parameter coefficient} if the equation is affine."""
    coeffs: dict = {}
    for mono, c in eq.items():
        rest = [(a, e) for a, e in mono if not isinstance(a, Param)]
        pm = tuple((a, e) for a, e in mono if isinstance(a, Param))
        if len(rest) > 1 or (rest and rest[0][1] != 1):
            return None
        key = rest[0][0] if rest else None
        coeffs[key] = coeffs.get(key, Poly.zero()) + Poly({pm: c})
    return coeffs


def default_target(fact: Fact) -> Poly | None:
    unk = _unknowns(fact.equation)
    tau = Expect(Poly.atom(TimeVar("tau")))
    if tau in unk:
        return Poly.atom(tau)
    return Poly.atom(unk[0]) if unk else None


def solve_for(fact: Fact, target: Poly | None = None,
              known: Mapping[Atom, RatFunc] | None = None) -> Fact:
    known = dict(known or {})
    eq = fact.equation
    target = target if target is not None else default_target(fact)
    if target is None:
        return Fact(fact.lhs, fact.rhs, RESIDUAL, None, None, ())
    t = target.single_atom()
    if t is None or t not in eq.atoms():
        raise OSTError(f"target {target} does not occur in {fact}")
    coeffs = _affine(eq)
    if coeffs is None:
        return Fact(fact.lhs, fact.rhs, RESIDUAL, target, None, tuple(_unknowns(eq)))
    ct = RatFunc(coeffs.pop(t))
    rest = RatFunc.lift(coeffs.pop(None, Poly.zero()))
    symbolic = Poly.zero()
    for a, c in coeffs.items():
        if a in known:
            rest = rest + RatFunc(c) * known[a]
        else:
            symbolic = symbolic + c * Poly.atom(a)
    if not symbolic.is_zero():
        # relational answer: target in terms of the remaining expectations
        if not (isinstance(t, Expect) and all(_exp_of_process(a) for a in symbolic.atoms()
                                               if not isinstance(a, Param))):
            return Fact(fact.lhs, fact.rhs, RESIDUAL, target, None,
                        tuple(a for a in _unknowns(symbolic)))
        try:
            inv = (-(RatFunc(Poly.one()) / ct)).as_poly()
            val = symbolic * inv + rest.as_poly() * inv
        except SymbolicError:
            return Fact(fact.lhs, fact.rhs, RESIDUAL, target, None, tuple(_unknowns(symbolic)))
        check = eq.subs({t: val}).subs({a: _poly_or_none(v) for a, v in known.items()
                                        if _poly_or_none(v) is not None})
        if not check.is_zero():
            raise OSTError(f"internal: relational solution {val} does not satisfy {fact}")
        return Fact(target, val, SOLVED, target, val, tuple(_unknowns(symbolic)))
    if ct.is_zero():
        raise OSTError(f"target {target} cancels out of {fact}")
    value = -rest / ct
    # re-substitute: c_t * value + rest == 0
    if not (ct * value + rest).is_zero():
        raise OSTError(f"internal: solution {value} does not satisfy {fact}")
    # cleared form den*target = num keeps both sides polynomial
    return Fact(target * value.den, value.num, SOLVED, target, value, ())


def _exp_of_process(a: Atom) -> bool:
    if not isinstance(a, Expect):
        return False
    atoms = a.body.atoms()
    return any(isinstance(b, Proc) for b in atoms) and all(
        isinstance(b, (Proc, Param)) for b in atoms)


def _poly_or_none(r: RatFunc):
    try:
        return r.as_poly()
    except SymbolicError:
        return None


def parse_target(text: str, rs: RecurrenceSystem) -> Poly:
    p = parse_symexpr(text, samples=frozenset(rs.dists), procs=frozenset(
        rs.program.process_vars))
    if p.single_atom() is None:
        raise OSTError(f"solve-for target {text!r} must be a single E[...] or Pr[...] term")
    return p


# fact files ------------------------------------------------------------------------

def format_fact_line(target: Poly, value) -> str:
    return f"{target} = {value}"


def _split_top_eq(line: str) -> tuple[str, str]:
    depth = 0
    for n, ch in enumerate(line):
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "=" and depth == 0 and line[n - 1:n] not in ("!", "<", ">") \
                and line[n + 1:n + 2] != "=":
            return line[:n].strip(), line[n + 1:].strip()
    raise OSTError(f"fact line has no top-level '=': {line!r}")


def read_facts(text: str, rs: RecurrenceSystem | None = None) -> dict[Atom, RatFunc]:
    out = {}
    procs = frozenset(rs.program.process_vars) if rs is not None else frozenset()
    samples = frozenset(rs.dists) if rs is not None else frozenset()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        lhs, rhs = _split_top_eq(line)
        try:
            a = parse_symexpr(lhs, samples, procs).single_atom()
            v = parse_closed_form(rhs)
        except Exception as exc:
            raise OSTError(f"fact line {n}: {exc}") from None
        if not isinstance(a, Expect):
            raise OSTError(f"fact line {n}: left side must be an E[...] or Pr[...] term")
        out[a] = v
    return out


def write_fact(fact: Fact) -> str:
    if fact.status != SOLVED or not isinstance(fact.closed_form, RatFunc):
        raise OSTError("only facts solved to a closed form can be written")
    return format_fact_line(fact.target, fact.closed_form) + "\n"


__all__ = ["Condition", "SideConditionReport", "Fact", "OSTError", "OSTRefused",
           "check_side_conditions", "check_bounded_increments", "check_bounded_variant",
           "invariant_ranges", "pre_state_ranges", "apply_ost", "apply_hints", "solve_for", "parse_target",
           "read_facts", "write_fact", "default_target", "RAW", "HINTED", "SOLVED", "RESIDUAL"]
