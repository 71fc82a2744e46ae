"""Simplification rules for conditional expectations and expectations.

Rules act on a single CondExp/Expect atom and are tried in list order:

=====================  =====================================================
condexp-const          E[c | F] = c for parameter-only c
condexp-linear         E[sum c_k m_k | F] = sum c_k E[m_k | F]
condexp-measurable     E[X_{i-n} * f | F_{i-1}] = X_{i-n} * E[f | F_{i-1}], n > 0
condexp-moment         E[S_i^k | F_{i-1}] = G(d)_k (and projected correlations)
condexp-independent    E[S_i * S'_i | F] = E[S_i | F] * E[S'_i | F] for S != S'
exp-const / exp-linear the same two laws for plain expectations
=====================  =====================================================
"""

from __future__ import annotations

from typing import Mapping

from .distributions import Distribution, moment
from .symbolic.expr import (Atom, CondExp, Expect, Index, Param, Poly, Proc, Sample, SumAtom,
                            TimeVar)
from .symbolic.rewrite import RewriteRule


def measurable(a: Atom, filt: Index) -> bool:
    """Is ``a`` determined by the history up to ``filt``?"""
    if isinstance(a, (Param, TimeVar)):
        return True
    if isinstance(a, (Proc, Sample)):
        if a.index.sym is None:
            # absolute indices only name initial values, which precede every filtration
            return isinstance(a, Proc)
        c = a.index.compare(filt)
        return c is not None and c <= 0
    if isinstance(a, SumAtom):
        hi_ok = a.hi.compare(filt)
        if hi_ok is None or hi_ok > 0:
            return False
        inner = Index(a.var, 0)
        return all(measurable(b, inner) or (isinstance(b, TimeVar) and b.name == a.var)
                   for b in a.body.atoms())
    return False


def _single(p: Poly):
    if len(p) != 1:
        return None
    (mono, c), = p.items()
    return mono, c


def _condexp_const(a):
    if isinstance(a, CondExp) and a.body.is_params_only():
        return a.body
    return None


def _condexp_linear(a):
    if not isinstance(a, CondExp):
        return None
    body = a.body
    if len(body) == 1:
        (mono, c), = body.items()
        if c == 1 and not any(isinstance(x, Param) for x, _ in mono):
            return None
    out = Poly.zero()
    for mono, c in body.items():
        coeff = Poly.const(c)
        rest = []
        for x, e in mono:
            if isinstance(x, Param):
                coeff = coeff * Poly.atom(x, e)
            else:
                rest.append((x, e))
        if rest:
            coeff = coeff * Poly.atom(CondExp(Poly({tuple(rest): 1}), a.filt))
        out = out + coeff
    return out


def _condexp_measurable(a):
    if not isinstance(a, CondExp):
        return None
    s = _single(a.body)
    if s is None:
        return None
    mono, _ = s
    meas = [(x, e) for x, e in mono if measurable(x, a.filt)]
    if not meas:
        return None
    rest = [(x, e) for x, e in mono if not measurable(x, a.filt)]
    out = Poly({tuple(meas): 1})
    if rest:
        out = out * Poly.atom(CondExp(Poly({tuple(rest): 1}), a.filt))
    return out


def _sample_groups(mono):
    groups: dict = {}
    for x, e in mono:
        if not isinstance(x, Sample):
            return None
        groups.setdefault((x.name, x.index), []).append((x, e))
    return groups


def _future(x: Sample, filt: Index) -> bool:
    c = x.index.compare(filt)
    return c is not None and c > 0


def make_moment_rule(dists: Mapping[str, Distribution]) -> RewriteRule:
    def apply(a):
        if not isinstance(a, CondExp):
            return None
        s = _single(a.body)
        if s is None:
            return None
        groups = _sample_groups(s[0])
        if not groups or len(groups) != 1:
            return None
        (name, _), items = next(iter(groups.items()))
        if not all(_future(x, a.filt) for x, _ in items) or name not in dists:
            return None
        powers = {(x.proj or 1): e for x, e in items}
        return moment(dists[name], powers)

    return RewriteRule("condexp-moment", "moments and correlations of one fresh sample", apply)


def _condexp_independent(a):
    if not isinstance(a, CondExp):
        return None
    s = _single(a.body)
    if s is None:
        return None
    groups = _sample_groups(s[0])
    if not groups or len(groups) < 2:
        return None
    if not all(_future(x, a.filt) for items in groups.values() for x, _ in items):
        return None
    out = Poly.one()
    for items in groups.values():
        out = out * Poly.atom(CondExp(Poly({tuple(items): 1}), a.filt))
    return out


def _exp_const(a):
    if isinstance(a, Expect) and a.body.is_params_only():
        return a.body
    return None


def _exp_linear(a):
    if not isinstance(a, Expect):
        return None
    body = a.body
    if len(body) == 1:
        (mono, c), = body.items()
        if c == 1 and not any(isinstance(x, Param) for x, _ in mono):
            return None
    out = Poly.zero()
    for mono, c in body.items():
        coeff = Poly.const(c)
        rest = []
        for x, e in mono:
            if isinstance(x, Param):
                coeff = coeff * Poly.atom(x, e)
            else:
                rest.append((x, e))
        if rest:
            coeff = coeff * Poly.atom(Expect(Poly({tuple(rest): 1})))
        out = out + coeff
    return out


CONDEXP_CONST = RewriteRule("condexp-const", "constants are measurable", _condexp_const)
CONDEXP_LINEAR = RewriteRule("condexp-linear", "linearity of conditional expectation",
                             _condexp_linear)
CONDEXP_MEASURABLE = RewriteRule("condexp-measurable", "past values factor out",
                                 _condexp_measurable)
CONDEXP_INDEPENDENT = RewriteRule("condexp-independent", "distinct fresh samples are independent",
                                  _condexp_independent)
EXP_CONST = RewriteRule("exp-const", "expectation of a constant", _exp_const)
EXP_LINEAR = RewriteRule("exp-linear", "linearity of expectation", _exp_linear)


def condexp_rules(dists: Mapping[str, Distribution]) -> list[RewriteRule]:
    # powers of one sample collapse to moments before independence splits them
    return [CONDEXP_CONST, CONDEXP_LINEAR, CONDEXP_MEASURABLE, make_moment_rule(dists),
            CONDEXP_INDEPENDENT]


EXPECT_RULES = [EXP_CONST, EXP_LINEAR]
