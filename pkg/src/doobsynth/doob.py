"""Doob decomposition of a seed process and symbolic martingale checking."""

from __future__ import annotations

from dataclasses import dataclass, field

from .recurrence import RecurrenceSystem, SeedProcess
from .rules import condexp_rules
from .symbolic.expr import CondExp, Index, Poly, SumAtom, SymbolicError
from .symbolic.rewrite import RewriteTrace, rewrite_fixpoint
from .symbolic.sums import peel_last, simplify_sum


class StuckError(SymbolicError):
    """A conditional expectation survived rewriting."""

    def __init__(self, term):
        self.term = term
        super().__init__(f"cannot simplify conditional expectation: {term}")


@dataclass
class MartingaleForm:
    M0: Poly          # value at the start index, parameters only
    M: Poly           # M_i, time symbol "i"
    start: int        # absolute index of M0 (m - 1)
    increment: Poly   # M_i - M_{i-1}
    trace: RewriteTrace = field(default_factory=RewriteTrace, repr=False)

    @property
    def residual_sum(self) -> bool:
        return any(isinstance(a, SumAtom) for a in self.M.atoms())


def stuck_terms(p: Poly) -> list:
    return sorted((a for a in p.all_atoms() if isinstance(a, CondExp)), key=lambda a: a.sort_key)


def conditional_step(rs: RecurrenceSystem, e: Poly, sym: str, trace: RewriteTrace) -> Poly:
    """E[e | F_{sym-1}] after unrolling every process atom at ``sym`` one step."""
    ix = Index(sym, 0)
    unrolled = e.subs(rs.unroll_map(ix))
    out = rewrite_fixpoint(Poly.atom(CondExp(unrolled, ix - 1)), condexp_rules(rs.dists),
                           trace=trace)
    return out


def doob_decompose(rs: RecurrenceSystem, sp: SeedProcess, *, trace: RewriteTrace | None = None
                   ) -> MartingaleForm:
    trace = trace if trace is not None else RewriteTrace()
    Ej = sp.at(Index("j", 0))
    cond = conditional_step(rs, Ej, "j", trace)
    stuck = stuck_terms(cond)
    if stuck:
        raise StuckError(stuck[0])
    D = Ej - cond
    lo = Index(None, rs.m)
    M = sp.E_start + Poly.atom(SumAtom("j", lo, Index("i", 0), D))
    M = simplify_sum(M)
    return MartingaleForm(sp.E0, M, rs.m - 1, D.reindex("j", Index("i", 0)), trace)


def _peel_current(p: Poly) -> Poly:
    def fn(a):
        if isinstance(a, SumAtom) and a.hi == Index("i", 0):
            return peel_last(a)
        return None

    return p.map_atoms(fn)


@dataclass
class Verdict:
    holds: bool | None   # None: unknown (rewriting got stuck)
    residual: Poly
    trace: RewriteTrace

    def __str__(self):
        if self.holds is None:
            return f"unknown (stuck at {stuck_terms(self.residual)[0]})"
        return "martingale" if self.holds else f"not a martingale (drift {self.residual})"


def check_martingale(rs: RecurrenceSystem, candidate: Poly) -> Verdict:
    """Decide E[C_i | F_{i-1}] = C_{i-1} for i past the initial history."""
    trace = RewriteTrace()
    cur = _peel_current(candidate)
    prev = candidate.reindex("i", Index("i", -1))
    try:
        drift = conditional_step(rs, cur - prev, "i", trace)
    except SymbolicError:
        return Verdict(None, Poly.atom(CondExp(cur - prev, Index("i", -1))), trace)
    if stuck_terms(drift):
        return Verdict(None, drift, trace)
    return Verdict(drift.is_zero(), drift, trace)
