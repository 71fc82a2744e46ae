"""Concrete interpreter and Monte Carlo validator.

The simulator evaluates the program AST directly (not the extracted
recurrences), so agreement with the symbolic results is an independent check.
All trials advance in lockstep as numpy vectors.  Randomness is a pure
function of ``(seed, trial, step, slot)`` (a splitmix64 hash), so any split of
the trial range reproduces the same per-trial draws, and reports merge exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .recurrence import build_distribution
from .symbolic.expr import (And, Atom, Expect, Formula, Index, Indicator, Not, Or, Param, Poly, Proc,
                            Rel, Sample, SumAtom, TimeVar, Truth)
from .syntax import (BinOp, BoolConst, BoolOp, Cmp, Expr, Guard, Neg, NotG, Num, ParamRef, Pow,
                     ProcRef, Program, Proj, SampleRef)

CENSOR_LIMIT = 0.001
_INT_LIMIT = 2 ** 31
_U64 = np.uint64
_MASK = (1 << 64) - 1


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    params: Mapping[str, Fraction] = field(default_factory=dict)
    trials: int = 100_000
    seed: int = 42
    max_steps: int = 1_000_000
    first_trial: int = 0          # offset into the global trial sequence

    def split(self, k: int) -> list[SimConfig]:
        """Disjoint consecutive trial ranges covering this config."""
        bounds = [self.trials * n // k for n in range(k + 1)]
        return [SimConfig(self.params, hi - lo, self.seed, self.max_steps, self.first_trial + lo)
                for lo, hi in zip(bounds, bounds[1:]) if hi > lo]


def check_params(p: Program, params: Mapping[str, Fraction]) -> dict[str, Fraction]:
    out = {k: Fraction(v) for k, v in params.items()}
    missing = [d.name for d in p.params if d.name not in out]
    if missing:
        raise SimulationError(f"unbound parameter(s): {', '.join(missing)}")
    for d in p.params:
        v = out[d.name]
        if d.integral and v.denominator != 1:
            raise SimulationError(f"{d.name} = {v} must be an integer")
        for bound, closed, is_lo in ((d.lo, d.lo_closed, True), (d.hi, d.hi_closed, False)):
            if bound is None:
                continue
            b = _eval_scalar_params(bound, out)
            ok = (v >= b if closed else v > b) if is_lo else (v <= b if closed else v < b)
            if not ok:
                raise SimulationError(f"{d.name} = {v} violates its declared range")
    return out


def _eval_scalar_params(e: Expr, params) -> Fraction:
    return Fraction(_ev(e, lambda n, o: None, lambda n, k: None, params))


# statistics ---------------------------------------------------------------------

@dataclass(frozen=True)
class Stats:
    """Exact power sums; merging is addition, hence associative and commutative."""

    n: int = 0
    s1: Fraction = Fraction(0)
    s2: Fraction = Fraction(0)

    @staticmethod
    def of(values) -> Stats:
        vals = [v if isinstance(v, Fraction) else Fraction(int(v)) for v in values]
        return Stats(len(vals), sum(vals, Fraction(0)), sum((v * v for v in vals), Fraction(0)))

    def __add__(self, o: Stats) -> Stats:
        return Stats(self.n + o.n, self.s1 + o.s1, self.s2 + o.s2)

    @property
    def mean(self) -> Fraction:
        return self.s1 / self.n if self.n else Fraction(0)

    @property
    def variance(self) -> Fraction:
        if self.n < 2:
            return Fraction(0)
        return (self.s2 - self.s1 * self.s1 / self.n) / (self.n - 1)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n else math.inf

    def as_dict(self) -> dict:
        return {"mean": float(self.mean), "variance": float(self.variance),
                "stderr": self.stderr, "trials": self.n}


@dataclass
class SimReport:
    trials: int
    censored: int
    quantities: dict            # name -> Stats over uncensored trials
    max_increment: Fraction | None = None
    increment_violations: int = 0
    increments_checked: int = 0

    def __add__(self, o: SimReport) -> SimReport:
        keys = set(self.quantities) | set(o.quantities)
        q = {k: self.quantities.get(k, Stats()) + o.quantities.get(k, Stats()) for k in keys}
        mi = [x for x in (self.max_increment, o.max_increment) if x is not None]
        return SimReport(self.trials + o.trials, self.censored + o.censored,
                         dict(sorted(q.items())), max(mi) if mi else None,
                         self.increment_violations + o.increment_violations,
                         self.increments_checked + o.increments_checked)

    def as_dict(self) -> dict:
        return {"trials": self.trials, "censored": self.censored,
                "quantities": {k: v.as_dict() for k, v in self.quantities.items()},
                "max_increment": None if self.max_increment is None
                else str(self.max_increment),
                "increment_violations": self.increment_violations}


# randomness ------------------------------------------------------------------------

def _mix(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def uniform64(seed: int, trials: np.ndarray, step: int, slot: int) -> np.ndarray:
    """64-bit uniforms, a pure function of (seed, trial, step, slot)."""
    with np.errstate(over="ignore"):
        g = _U64(0x9E3779B97F4A7C15)
        h = _mix(_U64(seed & _MASK) + g * trials.astype(_U64))
        h = _mix(h ^ (_U64(step & _MASK) * _U64(0xD1B54A32D192ED03)))
        return _mix(h + _U64(slot + 1) * g)


class Sampler:
    """Inverse-CDF lookup on exact rational weights (thresholds scaled to 2^64)."""

    def __init__(self, dist, params: Mapping[str, Fraction]):
        pts = dist.instantiate(params)
        self.points = [pt for pt, _ in pts]
        q = math.lcm(*(pr.denominator for _, pr in pts))
        cum, acc = [], 0
        for _, pr in pts[:-1]:
            acc += pr.numerator * (q // pr.denominator)
            cum.append((acc << 64) // q)
        self.thresholds = np.array(cum, dtype=_U64)
        self.arity = dist.arity
        self.coords = [np.array([pt[c] for pt in self.points], dtype=np.int64)
                       for c in range(self.arity)]

    def draw(self, u: np.ndarray) -> list[np.ndarray]:
        k = np.searchsorted(self.thresholds, u, side="right")
        return [c[k] for c in self.coords]

    def point_index(self, u: int) -> int:
        return int(np.searchsorted(self.thresholds, np.array([u], dtype=_U64), side="right")[0])


# expression evaluation over scalars or arrays -------------------------------------------

def _ev(e: Expr, proc, sample, params):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, ParamRef):
        v = params[e.name]
        return int(v) if v.denominator == 1 else v
    if isinstance(e, ProcRef):
        return proc(e.name, e.offset)
    if isinstance(e, SampleRef):
        return sample(e.name, None)
    if isinstance(e, Proj):
        return sample(e.arg.name, e.index)
    if isinstance(e, Neg):
        return -_ev(e.arg, proc, sample, params)
    if isinstance(e, Pow):
        return _ev(e.base, proc, sample, params) ** e.exp
    if isinstance(e, BinOp):
        a = _ev(e.left, proc, sample, params)
        b = _ev(e.right, proc, sample, params)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a * Fraction(1) / b if not isinstance(b, np.ndarray) else a / b
    raise TypeError(e)


def _ev_guard(g: Guard, proc, sample, params):
    if isinstance(g, BoolConst):
        return g.value
    if isinstance(g, Cmp):
        vals = [_ev(a, proc, sample, params) for a in g.args]
        out = True
        for op, l, r in zip(g.ops, vals, vals[1:]):
            c = {"=": lambda: l == r, "!=": lambda: l != r, "<": lambda: l < r,
                 "<=": lambda: l <= r, ">": lambda: l > r, ">=": lambda: l >= r}[op]()
            out = out & c
        return out
    if isinstance(g, NotG):
        v = _ev_guard(g.arg, proc, sample, params)
        return ~v if isinstance(v, np.ndarray) else not v
    if isinstance(g, BoolOp):
        vals = [_ev_guard(x, proc, sample, params) for x in g.items]
        if g.op == "and":
            out = vals[0]
            for v in vals[1:]:
                out = out & v
            return out
        if g.op == "or":
            out = vals[0]
            for v in vals[1:]:
                out = out | v
            return out
        a, b = vals
        return (~a if isinstance(a, np.ndarray) else not a) | b
    raise TypeError(g)


def guard_reads_samples(p: Program) -> bool:
    return any(isinstance(e, (SampleRef, Proj)) for x in p.guard.exprs() for e in x.walk())


# scalar interpreter (oracle for the recurrences) ---------------------------------------

def interpret(p: Program, params: Mapping[str, Fraction], draws: list[dict],
              check_guard: bool = False) -> list[dict]:
    """Exact execution driven by explicit draws; states at indices m-1, m, ...

    With ``check_guard`` the run stops once the guard fails.
    """
    params = {k: Fraction(v) for k, v in params.items()}
    m = p.init_length
    hist = {x: [_ev(p.init_expr(x, k), None, None, params) for k in range(m)]
            for x in p.process_vars}
    states = [{x: Fraction(h[-1]) for x, h in hist.items()}]
    last: dict = {}
    do_while = guard_reads_samples(p)
    for n, draw in enumerate(draws):
        if check_guard and not (do_while and n == 0):
            ok = _ev_guard(p.guard, lambda x, o: hist[x][len(hist[x]) - 1 + o],
                           lambda s, k: _pick(last[s], k), params)
            if not ok:
                break
        cur: dict = {}

        def proc(x, o, cur=cur):
            if o == 0:
                return cur[x] if x in cur else hist[x][-1]
            return hist[x][len(hist[x]) + o]

        for s in p.samples:
            last[s.var] = tuple(draw[s.var]) if isinstance(draw[s.var], (tuple, list)) \
                else (draw[s.var],)
        for a in p.body:
            cur[a.var] = _ev(a.expr, proc, lambda s, k: _pick(last[s], k), params)
        for x in p.process_vars:
            hist[x].append(cur.get(x, hist[x][-1]))
        states.append({x: Fraction(h[-1]) for x, h in hist.items()})
    return states


def _pick(pt, k):
    return pt[0] if k is None else pt[k - 1]


# vectorized simulation ------------------------------------------------------------------

@dataclass
class _Trace:
    """Per-trial exit data and running sums needed to evaluate quantities."""

    tau: np.ndarray
    hist: dict          # var -> list of arrays, hist[x][k] = value at index tau-k
    last: dict          # sample -> list of coordinate arrays
    sums: dict          # SumAtom -> object array
    steps: np.ndarray


def _needs_objects(p: Program, params) -> bool:
    """Rational state values force exact object arrays; integers use int64."""
    exprs = [a.expr for a in p.body] + [ia.expr for ia in p.init]
    for e in exprs:
        for n in e.walk():
            if isinstance(n, BinOp) and n.op == "/":
                return True
            if isinstance(n, ParamRef) and params[n.name].denominator != 1:
                return True
    return False


# exact scaled arithmetic -------------------------------------------------------------

_SAFE = 2 ** 62


@dataclass
class Scaled:
    """Exact per-trial rationals as integer numerators over one denominator."""

    num: np.ndarray
    den: int = 1

    def __add__(self, o: Scaled) -> Scaled:
        if o.den == self.den:
            return Scaled(_as_obj(self.num) + _as_obj(o.num), self.den)
        lcm = math.lcm(self.den, o.den)
        return Scaled(_as_obj(self.num) * (lcm // self.den) + _as_obj(o.num) * (lcm // o.den),
                      lcm)

    def __getitem__(self, idx) -> Scaled:
        return Scaled(self.num[idx], self.den)

    def sign(self) -> np.ndarray:
        return np.sign(self.num).astype(np.int64) if self.num.dtype != object else \
            np.array([(v > 0) - (v < 0) for v in self.num], dtype=np.int64)

    def stats(self) -> Stats:
        if self.num.dtype == object and any(isinstance(v, Fraction) for v in self.num):
            vals = [Fraction(v) / self.den for v in self.num]
            return Stats(len(vals), sum(vals, Fraction(0)), sum((v * v for v in vals),
                                                                 Fraction(0)))
        o = _as_obj(self.num)
        return Stats(len(o), Fraction(int(o.sum()), self.den),
                     Fraction(int((o * o).sum()), self.den * self.den))

    def exceeds(self, bound: Fraction) -> np.ndarray:
        """|value| > bound, exactly."""
        o = _as_obj(self.num)
        lim = bound.numerator * self.den
        return np.array([abs(v) * bound.denominator > lim for v in o], dtype=bool)

    def max_abs(self) -> Fraction | None:
        if len(self.num) == 0:
            return None
        m = max(abs(v) for v in _as_obj(self.num))
        return Fraction(m) / self.den


def _as_obj(a: np.ndarray) -> np.ndarray:
    return a if a.dtype == object else a.astype(object)


def _maxabs(a) -> int:
    if isinstance(a, np.ndarray):
        if a.size == 0:
            return 0
        if a.dtype == object:
            return max(abs(v) for v in a)
        return int(np.abs(a).max())
    return abs(a)


def _poly_value(poly: Poly, atom, size: int) -> Scaled:
    """Evaluate a polynomial; ``atom`` returns a scalar or an integer/object array."""
    cache: dict = {}
    terms = []
    for mono, c in poly.items():
        coeff = Fraction(c)
        arr = None
        for a, e in mono:
            if a not in cache:
                cache[a] = atom(a)
            v = cache[a]
            if isinstance(v, np.ndarray):
                if v.dtype != object and _maxabs(v) ** e >= _SAFE:
                    v = v.astype(object)
                f = v ** e
                if arr is not None and arr.dtype != object and f.dtype != object \
                        and _maxabs(arr) * _maxabs(f) >= _SAFE:
                    arr = arr.astype(object)
                arr = f if arr is None else arr * f
            else:
                coeff *= Fraction(v) ** e
        terms.append((coeff, arr))
    den = math.lcm(*(t[0].denominator for t in terms)) if terms else 1
    total = np.zeros(size, dtype=np.int64)
    budget = 0
    for coeff, arr in terms:
        k = int(coeff * den)
        budget += abs(k) * (_maxabs(arr) if arr is not None else 1)
        if budget >= _SAFE and total.dtype != object:
            total = total.astype(object)
        if arr is None:
            total = total + k
        else:
            if total.dtype == object or arr.dtype == object:
                total = _as_obj(total) + _as_obj(arr) * k
            else:
                total = total + arr * k
    return Scaled(total, den)


def simulate(p: Program, cfg: SimConfig, *, sums: tuple = (), history: int = 1,
             increment=None, increment_bound: Fraction | None = None,
             checkpoints: tuple = ()) -> tuple[_Trace, np.ndarray, dict]:
    """Run all trials; returns the trace, the censored mask, and extra stats.

    ``increment`` (see :func:`increment_fn`) evaluates M_i - M_{i-1} on the
    active trials of each step; ``checkpoints`` are step counts n at which the
    running sum of increments, M at min(n, tau) minus M_0, is recorded.
    """
    params = check_params(p, cfg.params)
    m = p.init_length
    n_trials = cfg.trials
    trial_ids = np.arange(cfg.first_trial, cfg.first_trial + n_trials, dtype=np.int64)
    use_obj = _needs_objects(p, params)
    depth = max(m, history)
    hist = {}
    for x in p.process_vars:
        init_vals = [_ev(p.init_expr(x, k), None, None, params) for k in range(m)]
        if any(Fraction(v).denominator != 1 for v in init_vals):
            use_obj = True
        hist[x] = [np.full(n_trials, init_vals[m - 1 - k] if k < m else 0, dtype=object)
                   for k in range(depth)]
    dtype = object if use_obj else np.int64
    if not use_obj:
        hist = {x: [a.astype(np.int64) for a in lags] for x, lags in hist.items()}
    samplers = {s.var: Sampler(build_distribution(s.dist), params) for s in p.samples}
    last = {s.var: [np.zeros(n_trials, dtype=np.int64)
                    for _ in range(samplers[s.var].arity)] for s in p.samples}
    tau = np.full(n_trials, m - 1, dtype=np.int64)
    steps = np.zeros(n_trials, dtype=np.int64)
    active = np.ones(n_trials, dtype=bool)
    sum_acc = {a: Scaled(np.zeros(n_trials, dtype=object)) for a in sums}
    inc_acc = Scaled(np.zeros(n_trials, dtype=object))
    marks: dict = {n: None for n in checkpoints}
    extra = {"max_increment": None, "violations": 0, "checked": 0}
    do_while = guard_reads_samples(p)

    everyone = np.arange(n_trials)
    for a in sums:
        # terms of the sum that precede the loop
        for j in range(a.lo.off, m):
            sum_acc[a] = sum_acc[a] + _eval_poly_at(a.body, a.var, hist, last, params,
                                                    everyone, m - 1, j)
    step = 0
    while True:
        idx = np.nonzero(active)[0]
        if idx.size and not (do_while and step == 0):
            ok = _ev_guard(p.guard, lambda x, o: hist[x][-o][idx],
                           lambda s, k: last[s][(k or 1) - 1][idx], params)
            ok = np.broadcast_to(np.asarray(ok, dtype=bool), idx.shape)
            active[idx[~ok]] = False
            idx = idx[ok]
        for n in marks:
            if marks[n] is None and step == n:
                marks[n] = Scaled(inc_acc.num.copy(), inc_acc.den)
        if idx.size == 0 or step >= cfg.max_steps:
            break
        tids = trial_ids[idx]
        for slot, s in enumerate(p.samples):
            u = uniform64(cfg.seed, tids, step, slot)
            for c, arr in enumerate(samplers[s.var].draw(u)):
                last[s.var][c][idx] = arr
        cur: dict = {}

        def proc(x, o, cur=cur):
            if o == 0:
                return cur[x] if x in cur else hist[x][0][idx]
            return hist[x][-o - 1][idx]

        def sample(s, k):
            return last[s][(k or 1) - 1][idx]

        for a in p.body:
            v = _ev(a.expr, proc, sample, params)
            cur[a.var] = np.broadcast_to(np.asarray(v, dtype=dtype), idx.shape)
        if increment is not None:
            d = increment(hist, cur, last, idx, m + step, params)
            part = Scaled(np.zeros(n_trials, dtype=object), d.den)
            part.num[idx] = _as_obj(d.num)
            inc_acc = inc_acc + part
            mx = d.max_abs()
            if mx is not None and (extra["max_increment"] is None or mx > extra["max_increment"]):
                extra["max_increment"] = mx
            if increment_bound is not None:
                extra["violations"] += int(d.exceeds(increment_bound).sum())
            extra["checked"] += idx.size
        for x in p.process_vars:
            lags = hist[x]
            for k in range(len(lags) - 1, 0, -1):
                lags[k][idx] = lags[k - 1][idx]
            if x in cur:
                lags[0][idx] = cur[x]
        if not use_obj:
            for x in p.process_vars:
                if idx.size and np.abs(hist[x][0][idx]).max() > _INT_LIMIT:
                    raise SimulationError(f"{x} exceeds the integer range of the fast path")
        tau[idx] += 1
        steps[idx] += 1
        step += 1
        for a in sums:
            if m - 1 + step >= a.lo.off:
                term = _eval_poly_at(a.body, a.var, hist, last, params, idx, m - 1 + step,
                                     m - 1 + step)
                part = Scaled(np.zeros(n_trials, dtype=object), term.den)
                part.num[idx] = _as_obj(term.num)
                sum_acc[a] = sum_acc[a] + part
    censored = active.copy()
    for n in marks:
        if marks[n] is None:
            marks[n] = inc_acc
    extra["checkpoints"] = marks
    return _Trace(tau, hist, last, sum_acc, steps), censored, extra


def _eval_poly_at(poly: Poly, var: str, hist, last, params, idx, cur_index: int,
                  at: int) -> Scaled:
    """Evaluate a sum body with bound variable ``var`` set to index ``at``."""

    def atom(a: Atom):
        if isinstance(a, Param):
            return params[a.name]
        if isinstance(a, TimeVar) and a.name == var:
            return at
        if isinstance(a, (Proc, Sample)):
            ix = a.index
            if ix.sym not in (None, var):
                raise SimulationError(f"cannot evaluate {a} inside a sum over {var}")
            pos = (at + ix.off) if ix.sym is not None else ix.off
            lag = cur_index - pos
            if isinstance(a, Proc):
                return hist[a.name][lag][idx]
            if lag != 0:
                raise SimulationError(f"cannot evaluate past sample {a}")
            return last[a.name][(a.proj or 1) - 1][idx]
        raise SimulationError(f"cannot evaluate {a} inside a sum")

    return _poly_value(poly, atom, len(idx))


def increment_fn(d: Poly):
    """Callback evaluating M_i - M_{i-1} (symbol ``i``) during a step."""

    def fn(hist, cur, last, idx, i, params) -> Scaled:
        def atom(a: Atom):
            if isinstance(a, Param):
                return params[a.name]
            if isinstance(a, TimeVar) and a.name == "i":
                return i
            if isinstance(a, Proc) and a.index.sym == "i":
                if a.index.off == 0:
                    return np.asarray(cur[a.name] if a.name in cur else hist[a.name][0][idx])
                return hist[a.name][-a.index.off - 1][idx]
            if isinstance(a, Sample) and a.index == Index("i", 0):
                return last[a.name][(a.proj or 1) - 1][idx]
            raise SimulationError(f"cannot evaluate {a} in an increment")

        return _poly_value(d, atom, len(idx))

    return fn


# quantities at exit ---------------------------------------------------------------------

def exit_value(poly: Poly, tr: _Trace, params) -> Scaled:
    """Per-trial value of a polynomial over exit atoms (tau, x@(tau-k), indicators, sums)."""
    n = tr.tau.size

    def atom(a: Atom):
        if isinstance(a, Param):
            return params[a.name]
        if isinstance(a, TimeVar):
            if a.name != "tau":
                raise SimulationError(f"time symbol {a} is not estimable")
            return tr.tau
        if isinstance(a, Proc):
            ix = a.index
            if ix.sym is None:
                raise SimulationError(f"initial value {a} must be substituted before estimation")
            if ix.sym != "tau" or ix.off > 0:
                raise SimulationError(f"{a} is not estimable at exit")
            return tr.hist[a.name][-ix.off]
        if isinstance(a, Sample):
            if a.index.sym != "tau" or a.index.off != 0:
                raise SimulationError(f"{a} is not estimable at exit")
            return tr.last[a.name][(a.proj or 1) - 1]
        if isinstance(a, Indicator):
            return formula_value(a.formula, tr, params).astype(np.int64)
        if isinstance(a, SumAtom):
            if a not in tr.sums:
                raise SimulationError(f"sum {a} was not tracked")
            acc = tr.sums[a]
            if acc.den != 1:
                raise SimulationError(f"sum {a} has a fractional body")
            return acc.num
        raise SimulationError(f"{a} is not estimable")

    return _poly_value(poly, atom, n)


def formula_value(f: Formula, tr: _Trace, params) -> np.ndarray:
    n = tr.tau.size
    if isinstance(f, Truth):
        return np.full(n, f.value)
    if isinstance(f, Rel):
        sg = exit_value(f.poly, tr, params).sign()
        return {"=": sg == 0, "!=": sg != 0, "<": sg < 0, "<=": sg <= 0}[f.op]
    if isinstance(f, And):
        out = np.ones(n, dtype=bool)
        for g in f.items:
            out &= formula_value(g, tr, params)
        return out
    if isinstance(f, Or):
        out = np.zeros(n, dtype=bool)
        for g in f.items:
            out |= formula_value(g, tr, params)
        return out
    if isinstance(f, Not):
        return ~formula_value(f.item, tr, params)
    raise TypeError(f)


def _collect(poly: Poly, kind) -> set:
    return {a for a in poly.all_atoms() if isinstance(a, kind)}


def _history_needed(polys) -> int:
    h = 1
    for p in polys:
        for a in p.all_atoms():
            if isinstance(a, (Proc, Sample)) and a.index.sym == "tau":
                h = max(h, 1 - a.index.off)
    return h


def expectation_body(side: Poly) -> Poly:
    """Replace E[body] by body: a per-trial estimator of a linear fact side."""
    out = Poly.zero()
    for mono, c in side.items():
        exps = [(a, e) for a, e in mono if isinstance(a, Expect)]
        if len(exps) > 1 or (exps and exps[0][1] != 1):
            raise SimulationError("fact side is not linear in its expectations")
        rest = Poly({tuple((a, e) for a, e in mono if not isinstance(a, Expect)): c})
        out = out + (rest * exps[0][0].body if exps else rest)
    return out


@dataclass
class Verdict:
    status: str                 # PASS, FAIL or ABORTED
    lhs: Stats
    rhs: Stats
    diff: Stats
    censored: int
    trials: int

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def __str__(self):
        return (f"{self.status}: lhs {float(self.lhs.mean):.6g} +- {self.lhs.stderr:.3g}, "
                f"rhs {float(self.rhs.mean):.6g} +- {self.rhs.stderr:.3g} "
                f"({self.trials} trials, {self.censored} censored)")


def estimate(p: Program, cfg: SimConfig, quantities: Mapping[str, Poly],
             **kw) -> tuple[SimReport, dict]:
    """Estimate exit quantities (polynomials over exit atoms) over the trials."""
    polys = list(quantities.values())
    sums = tuple(sorted(set().union(*(_collect(q, SumAtom) for q in polys)) if polys else set(),
                        key=lambda a: a.sort_key))
    for a in sums:
        if a.hi.sym != "tau" or a.hi.off != 0 or a.lo.sym is not None:
            raise SimulationError(f"only sums from a fixed start up to tau are estimable: {a}")
    tr, censored, extra = simulate(p, cfg, sums=sums, history=_history_needed(polys), **kw)
    params = check_params(p, cfg.params)
    keep = ~censored
    stats = {}
    values = {}
    for name, q in quantities.items():
        v = exit_value(q, tr, params)[keep]
        values[name] = v
        stats[name] = v.stats()
    for n, acc in extra.get("checkpoints", {}).items():
        stats[f"M@min({n},tau)-M0"] = acc[keep].stats()
    rep = SimReport(cfg.trials, int(censored.sum()), stats, extra["max_increment"],
                    extra["violations"], extra["checked"])
    return rep, values


def validate(lhs: Poly, rhs: Poly, p: Program, cfg: SimConfig, init_bindings=None) -> Verdict:
    """Compare Monte Carlo estimates of both sides of ``lhs = rhs``."""
    params = check_params(p, cfg.params)

    def prep(side):
        body = expectation_body(side)
        if init_bindings:
            body = body.subs(init_bindings)
        return body

    L, R = prep(lhs), prep(rhs)
    rep, vals = estimate(p, cfg, {"lhs": L, "rhs": R, "diff": L - R})
    del params
    st = rep.quantities
    if rep.censored > CENSOR_LIMIT * rep.trials:
        warnings.warn(f"{rep.censored} of {rep.trials} trials hit the step limit; "
                      "validation aborted", RuntimeWarning, stacklevel=2)
        return Verdict("ABORTED", st["lhs"], st["rhs"], st["diff"], rep.censored, rep.trials)
    d = st["diff"]
    ok = abs(float(d.mean)) <= 4 * d.stderr + 1e-9
    return Verdict("PASS" if ok else "FAIL", st["lhs"], st["rhs"], d, rep.censored, rep.trials)


__all__ = ["SimConfig", "SimReport", "Stats", "Sampler", "SimulationError", "Verdict",
           "interpret", "simulate", "estimate", "validate", "uniform64", "exit_value",
           "expectation_body", "check_params", "increment_fn", "Scaled"]
