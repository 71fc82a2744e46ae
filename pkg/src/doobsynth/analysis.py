"""End-to-end analysis: program text in, structured result out."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .doob import MartingaleForm, check_martingale, doob_decompose
from .intervals import ParamContext
from .lexer import ParseError
from .montecarlo import SimConfig, SimulationError, validate
from .ost import (SOLVED, Fact, OSTError, OSTRefused, apply_hints, apply_ost,
                  check_side_conditions, parse_target, read_facts, solve_for, write_fact)
from .parser import parse_hints, parse_program, parse_seed, parse_variant
from .printer import show_expr, show_hint, show_variant
from .recurrence import RecurrenceError, extract_recurrences, lift_seed
from .symbolic.expr import Poly, SymbolicError
from .symbolic.ratfunc import RatFunc
from .symbolic.rewrite import RewriteTrace

SCHEMA = 1
EXIT = {"solved": 0, "residual": 2, "refused": 3, "error": 1}


@dataclass
class AnalysisRequest:
    path: str
    seed: str | None = None
    hints: list[str] = field(default_factory=list)
    variant: str | None = None
    solve_for: str | None = None
    use_facts: list[str] = field(default_factory=list)
    assume_ost: bool = False
    trace_rules: bool = False
    validate: SimConfig | None = None


@dataclass
class Analysis:
    """Everything a report needs; ``as_dict`` is the structured report."""

    request: AnalysisRequest
    status: str = "error"
    warnings: list[str] = field(default_factory=list)
    error: str | None = None
    program: object = None
    rs: object = None
    seed_text: str | None = None
    martingale: MartingaleForm | None = None
    martingale_check: str | None = None
    side: object = None
    ost_fact: Fact | None = None
    steps: list = field(default_factory=list)
    final: Fact | None = None
    validation: list = field(default_factory=list)
    trace: RewriteTrace | None = None
    hints: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT[self.status]

    def as_dict(self) -> dict:
        d: dict = {"schema": SCHEMA, "program": Path(self.request.path).name,
                   "status": self.status, "seed": self.seed_text}
        if self.rs is not None:
            d["recurrences"] = self.rs.lines()
        if self.martingale is not None:
            mf = self.martingale
            d["martingale"] = {"M_i": str(mf.M), "M_0": str(mf.M0),
                               "increment": str(mf.increment), "check": self.martingale_check}
        else:
            d["martingale"] = None
        if self.side is not None:
            d["side_conditions"] = [_cond_dict(c) for c in self.side.conditions]
            d["obligations"] = [_cond_dict(c) for c in self.side.obligations]
            d["assumed"] = self.side.assumed
        else:
            d["side_conditions"], d["obligations"], d["assumed"] = [], [], False
        d["hints"] = [show_hint(h) for h in self.hints]
        d["fact"] = ({"lhs": str(self.ost_fact.lhs), "rhs": str(self.ost_fact.rhs),
                      "status": self.ost_fact.status} if self.ost_fact else None)
        d["steps"] = [{"label": label, "lhs": str(f.lhs), "rhs": str(f.rhs)}
                      for label, f in self.steps]
        if self.final is not None and self.final.status == SOLVED:
            d["solved"] = {"target": str(self.final.target),
                           "closed_form": str(self.final.closed_form),
                           "relational": not isinstance(self.final.closed_form, RatFunc)}
        else:
            d["solved"] = None
        d["final"] = ({"lhs": str(self.final.lhs), "rhs": str(self.final.rhs),
                       "status": self.final.status,
                       "unknowns": [str(u) for u in self.final.unknowns]}
                      if self.final else None)
        d["validation"] = self.validation
        d["rule_trace"] = self.trace.lines() if self.trace is not None else None
        d["warnings"] = list(self.warnings)
        d["error"] = self.error
        return d


def _cond_dict(c) -> dict:
    out = {"name": c.name, "status": c.status, "detail": c.detail}
    if c.bound is not None:
        out["bound"] = str(c.bound)
    if c.variant is not None:
        out["variant"] = {"v": c.variant[0], "K": c.variant[1], "eps": c.variant[2]}
    return out


def analyze(req: AnalysisRequest) -> Analysis:
    res = Analysis(req)
    try:
        _run(req, res)
    except OSTRefused as exc:
        res.status, res.error = "refused", str(exc)
    except ParseError as exc:
        res.status, res.error = "error", f"{Path(req.path).name}:{exc}"
    except (OSError, OSTError, RecurrenceError, SymbolicError, SimulationError,
            ValueError) as exc:
        res.status, res.error = "error", str(exc)
    return res


def _run(req: AnalysisRequest, res: Analysis) -> None:
    path = Path(req.path)
    prog = parse_program(path.read_text())
    res.program = prog
    pr = prog.pragmas

    seed = pr.seed
    if req.seed is not None:
        flag_seed = parse_seed(req.seed, prog)
        if seed is not None and show_expr(seed) != show_expr(flag_seed):
            res.warnings.append("--seed overrides the #seed pragma")
        seed = flag_seed
    if seed is None:
        raise OSTError("no seed expression: pass --seed or add a #seed pragma")
    hints = list(pr.hints)
    if req.hints:
        flag_hints = [h for text in req.hints for h in parse_hints(text, prog)]
        if hints and [show_hint(h) for h in hints] != [show_hint(h) for h in flag_hints]:
            res.warnings.append("--hint flags replace the #hint pragmas")
        hints = flag_hints
    variant = pr.variant
    if req.variant is not None:
        flag_variant = parse_variant(req.variant, prog)
        if variant is not None and show_variant(variant) != show_variant(flag_variant):
            res.warnings.append("--variant overrides the #variant pragma")
        variant = flag_variant
    target_text = pr.solve_for
    if req.solve_for is not None:
        if target_text is not None and target_text != req.solve_for:
            res.warnings.append("--solve-for overrides the #solve-for pragma")
        target_text = req.solve_for
    fact_paths = [path.parent / f for f in pr.use_facts]
    if req.use_facts:
        if fact_paths and [p.resolve() for p in fact_paths] != [
                Path(f).resolve() for f in req.use_facts]:
            res.warnings.append("--use-fact flags replace the #use-fact pragmas")
        fact_paths = [Path(f) for f in req.use_facts]
    assume = req.assume_ost or pr.assume_ost
    res.seed_text = show_expr(seed)
    res.hints = hints

    rs = extract_recurrences(prog)
    res.rs = rs
    sp = lift_seed(rs, seed)
    trace = RewriteTrace()
    mf = doob_decompose(rs, sp, trace=trace)
    res.martingale = mf
    res.trace = trace if req.trace_rules else None
    res.martingale_check = str(check_martingale(rs, mf.M))

    ctx = ParamContext(prog)
    side = check_side_conditions(rs, sp, mf, ctx, variant, hints)
    res.side = side
    raw = apply_ost(mf, side, assume=assume)
    res.ost_fact = raw
    hinted, steps = apply_hints(raw, rs, hints, ctx)
    res.steps = steps.steps
    known = {}
    for fp in fact_paths:
        known.update(read_facts(Path(fp).read_text(), rs))
    target = parse_target(target_text, rs) if target_text else None
    final = solve_for(hinted, target, known)
    res.final = final
    res.status = "solved" if final.status == SOLVED else "residual"
    if req.validate is not None:
        res.validation = _validate_all(res, rs, prog, req.validate, known)


def _validate_all(res: Analysis, rs, prog, cfg: SimConfig, known) -> list[dict]:
    params = {k: Fraction(v) for k, v in cfg.params.items()}
    facts = [("ost", res.ost_fact)] + list(res.steps)
    if res.final is not None and res.final.status == SOLVED:
        cf = res.final.closed_form
        rhs = Poly.const(cf.evaluate(params)) if isinstance(cf, RatFunc) else res.final.rhs
        facts.append(("solved", Fact(res.final.target, rhs, SOLVED)))
    out = []
    for label, f in facts:
        lhs, rhs = f.lhs, f.rhs
        # known facts enter as constants at the chosen parameters
        subs = {a: Poly.const(v.evaluate(params)) for a, v in known.items()}
        lhs, rhs = lhs.subs(subs), rhs.subs(subs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            v = validate(lhs, rhs, prog, cfg, rs.init_bindings())
        out.append({"fact": label, "verdict": v.status, "lhs": float(v.lhs.mean),
                    "rhs": float(v.rhs.mean), "stderr": v.diff.stderr, "trials": v.trials,
                    "censored": v.censored})
    return out


def emit_fact(res: Analysis) -> str:
    if res.final is None:
        raise OSTError("nothing to emit: the analysis did not finish")
    return write_fact(res.final)


__all__ = ["AnalysisRequest", "Analysis", "analyze", "emit_fact", "EXIT", "SCHEMA"]
