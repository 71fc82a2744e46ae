"""Command-line driver: ``doobsynth analyze|simulate|check-martingale|bench``."""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from .analysis import SCHEMA, AnalysisRequest, analyze, emit_fact
from .doob import check_martingale
from .lexer import ParseError
from .montecarlo import SimConfig, SimulationError, estimate, expectation_body
from .parser import parse_program, parse_seed
from .recurrence import RecurrenceError, extract_recurrences, lift_seed
from .report import render, render_json, render_table
from .symbolic.expr import Index, Poly, SymbolicError, TimeVar
from .symbolic.parse import parse_symexpr

BENCH_SUITE = ("geom", "gamble", "gamble2", "miniabra", "fullabra")
BENCH_COLUMNS = ["program", "status", "seconds", "result"]


def _param(text: str) -> tuple[str, Fraction]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), Fraction(value.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational number: {value!r}") from None


def _sim_config(prog, args) -> SimConfig:
    params = prog.sim_params()
    params.update(dict(args.param or []))
    return SimConfig(params, trials=args.trials, seed=args.rng_seed, max_steps=args.max_steps)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--param", action="append", type=_param, metavar="NAME=VALUE",
                   help="concrete parameter value (overrides #sim)")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--rng-seed", type=int, default=42)
    p.add_argument("--max-steps", type=int, default=1_000_000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doobsynth", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="synthesize a martingale and derive facts at exit")
    a.add_argument("program")
    a.add_argument("--seed")
    a.add_argument("--hint", action="append", default=[], help="'scope: formula'")
    a.add_argument("--variant", help="'v, K[, eps]'")
    a.add_argument("--solve-for")
    a.add_argument("--use-fact", action="append", default=[])
    a.add_argument("--assume-ost", action="store_true")
    a.add_argument("--trace-rules", action="store_true")
    a.add_argument("--validate", action="store_true", help="cross-check facts by simulation")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--emit-fact", metavar="PATH", help="write the solved fact to PATH")
    a.add_argument("--out", metavar="PATH", help="also write the report to PATH")
    _add_sim_flags(a)

    s = sub.add_parser("simulate", help="Monte Carlo estimates of exit quantities")
    s.add_argument("program")
    s.add_argument("--quantity", action="append", default=[], metavar="NAME=EXPR",
                   help="exit quantity; bare variable names mean their value at exit")
    s.add_argument("--format", choices=("text", "json"), default="text")
    _add_sim_flags(s)

    c = sub.add_parser("check-martingale", help="decide whether a candidate is a martingale")
    c.add_argument("program")
    c.add_argument("candidate", nargs="?", help="process over time symbol i, e.g. 'x@i - p*i'")
    c.add_argument("--seed", help="check the martingale synthesized from this seed instead")
    c.add_argument("--format", choices=("text", "json"), default="text")

    b = sub.add_parser("bench", help="time the shipped examples")
    b.add_argument("suite", help="directory of .spp programs")
    b.add_argument("--format", choices=("text", "json"), default="text")
    return ap


# subcommands -------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = None
    if args.validate:
        try:
            cfg = _sim_config(parse_program(Path(args.program).read_text()), args)
        except (OSError, ParseError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    req = AnalysisRequest(args.program, seed=args.seed, hints=args.hint, variant=args.variant,
                          solve_for=args.solve_for, use_facts=args.use_fact,
                          assume_ost=args.assume_ost, trace_rules=args.trace_rules,
                          validate=cfg)
    res = analyze(req)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    text = render(res.as_dict(), args.format)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    if args.emit_fact:
        if res.status != "solved":
            print("error: --emit-fact needs a solved fact", file=sys.stderr)
            return 1
        Path(args.emit_fact).write_text(emit_fact(res))
    return res.exit_code


def cmd_simulate(args) -> int:
    try:
        prog = parse_program(Path(args.program).read_text())
        rs = extract_recurrences(prog)
        samples = frozenset(s.var for s in prog.samples)
        procs = frozenset(prog.process_vars)
        qs: dict[str, Poly] = {"tau": Poly.atom(TimeVar("tau"))}
        if prog.pragmas.seed is not None:
            qs["seed@tau"] = lift_seed(rs, prog.pragmas.seed).at(Index("tau", 0))
        for q in args.quantity:
            name, sep, expr = q.partition("=")
            if not sep or not name.strip().isidentifier():
                name, expr = q, q
            qs[name.strip()] = expectation_body(
                parse_symexpr(expr, samples, procs)).subs(rs.init_bindings())
        cfg = _sim_config(prog, args)
        rep, _ = estimate(prog, cfg, qs)
    except (OSError, ParseError, RecurrenceError, SymbolicError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    d = {"schema": SCHEMA, "program": Path(args.program).name,
         "params": {k: str(v) for k, v in sorted(cfg.params.items())},
         "rng_seed": cfg.seed, **rep.as_dict()}
    if args.format == "json":
        sys.stdout.write(render_json(d))
    else:
        print(f"PROGRAM {d['program']}  params {d['params']}  rng-seed {cfg.seed}")
        print(f"trials {rep.trials}, censored {rep.censored}")
        rows = [{"quantity": k, "mean": f"{v['mean']:.6g}", "stderr": f"{v['stderr']:.3g}",
                 "n": v["trials"]} for k, v in d["quantities"].items()]
        sys.stdout.write(render_table(rows, ["quantity", "mean", "stderr", "n"]))
    return 0


def cmd_check(args) -> int:
    try:
        prog = parse_program(Path(args.program).read_text())
        rs = extract_recurrences(prog)
        if args.candidate is not None:
            samples = frozenset(s.var for s in prog.samples)
            cand = parse_symexpr(args.candidate, samples)
        else:
            from .doob import doob_decompose
            seed = parse_seed(args.seed, prog) if args.seed else prog.pragmas.seed
            if seed is None:
                print("error: give a candidate, --seed or a #seed pragma", file=sys.stderr)
                return 1
            cand = doob_decompose(rs, lift_seed(rs, seed)).M
        v = check_martingale(rs, cand)
    except (OSError, ParseError, RecurrenceError, SymbolicError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    verdict = {True: "martingale", False: "not-martingale", None: "unknown"}[v.holds]
    d = {"schema": SCHEMA, "program": Path(args.program).name, "candidate": str(cand),
         "verdict": verdict, "drift": str(v.residual)}
    if args.format == "json":
        sys.stdout.write(render_json(d))
    else:
        print(f"candidate {d['candidate']}: {v}")
    return {True: 0, False: 2, None: 1}[v.holds]


def bench_rows(suite: Path) -> list[dict]:
    found = {p.stem: p for p in sorted(suite.glob("*.spp"))}
    if not found:
        return []
    rows = []
    names = list(BENCH_SUITE) + [n for n in found if n not in BENCH_SUITE]
    for name in names:
        if name not in found:
            rows.append({"program": name, "status": "SKIPPED", "seconds": "", "result": ""})
            continue
        t0 = time.perf_counter()
        res = analyze(AnalysisRequest(str(found[name])))
        dt = time.perf_counter() - t0
        d = res.as_dict()
        if d["solved"] is not None:
            result = f"{d['solved']['target']} = {d['solved']['closed_form']}"
        else:
            result = res.error or (f"{d['final']['lhs']} = {d['final']['rhs']}"
                                   if d["final"] else "")
        rows.append({"program": name, "status": res.status, "seconds": f"{dt:.2f}",
                     "result": result})
    return rows


def cmd_bench(args) -> int:
    suite = Path(args.suite)
    if not suite.is_dir():
        print(f"error: not a directory: {suite}", file=sys.stderr)
        return 1
    rows = bench_rows(suite)
    if args.format == "json":
        sys.stdout.write(render_json({"schema": SCHEMA, "rows": rows}))
    else:
        sys.stdout.write(render_table(rows, BENCH_COLUMNS))
    return 0


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate,
            "check-martingale": cmd_check, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
