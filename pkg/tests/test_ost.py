"""Side conditions, stopped facts, hint simplification and solving."""

import pytest

from conftest import load

from doobsynth.analysis import AnalysisRequest, analyze
from doobsynth.doob import doob_decompose
from doobsynth.intervals import ParamContext
from doobsynth.ost import (HINTED, RAW, RESIDUAL, SOLVED, Fact, OSTError, OSTRefused,
                           apply_hints, apply_ost, check_side_conditions, read_facts,
                           solve_for, write_fact)
from doobsynth.parser import parse_hints, parse_variant
from doobsynth.recurrence import lift_seed
from doobsynth.symbolic.parse import parse_closed_form, parse_symexpr

BOUNDS = {"geom": "p + 1", "gamble": "2*b", "gamble2": "2*b^2", "momentum": "1",
          "miniabra": "30"}


def pipeline(name, variant=None, hints=None):
    prog, rs = load(name)
    sp = lift_seed(rs, prog.pragmas.seed)
    mf = doob_decompose(rs, sp)
    ctx = ParamContext(prog)
    v = prog.pragmas.variant if variant is None else parse_variant(variant, prog)
    hs = prog.pragmas.hints if hints is None else parse_hints(hints, prog)
    return prog, rs, mf, ctx, check_side_conditions(rs, sp, mf, ctx, v, hs), hs


@pytest.mark.parametrize("name,bound", sorted(BOUNDS.items()))
def test_increment_bounds(name, bound):
    *_, sc, _ = pipeline(name)
    assert sc.bounded_increments.verified
    assert sc.bounded_increments.bound == parse_symexpr(bound)


@pytest.mark.parametrize("name", ["geom", "gamble", "gamble2", "miniabra", "fullabra"])
def test_finite_expected_time_verified(name):
    *_, sc, _ = pipeline(name)
    assert sc.ok and sc.obligations == []


def test_missing_variant_is_an_obligation_and_refused():
    _, _, mf, _, sc, _ = pipeline("momentum")
    assert not sc.ok
    assert [c.name for c in sc.obligations] == ["finite expected stopping time"]
    with pytest.raises(OSTRefused):
        apply_ost(mf, sc)
    fact = apply_ost(mf, sc, assume=True)
    assert sc.assumed and fact.status == RAW


@pytest.mark.parametrize("variant", ["x, b, 3/4", "x + 1, b, 1/2", "x*x, b, 1/2", "x - 1, b, 1/2"])
def test_unprovable_variants_are_not_verified(variant):
    # eps too large, v not bounded by K, or v zero inside the guard
    *_, sc, _ = pipeline("gamble", variant=variant)
    assert not sc.expected_time_finite.verified


def test_geometric_fact_chain():
    _, rs, mf, ctx, sc, hs = pipeline("geom")
    raw = apply_ost(mf, sc)
    assert str(raw) == "0 = E[x@tau - p*tau]"
    hinted, steps = apply_hints(raw, rs, hs, ctx)
    assert hinted.status == HINTED
    assert [label for label, _ in steps.steps] == ["hints", "linearity"]
    solved = solve_for(hinted)
    assert solved.status == SOLVED
    assert solved.closed_form == parse_closed_form("1/(1 - p)")
    assert (solved.equation - (solved.target * (1 - parse_symexpr("p")) - 1)).is_zero()


def test_disjunctive_exit_hint_splits_cases():
    _, rs, mf, ctx, sc, hs = pipeline("gamble")
    hinted, _ = apply_hints(apply_ost(mf, sc), rs, hs, ctx)
    assert str(hinted) == "a = b*Pr[x@tau = b]"


def test_overlapping_disjuncts_are_not_split():
    _, rs, mf, ctx, sc, _ = pipeline("gamble", hints="at-exit: x <= 0 \\/ x >= 0")
    hinted, _ = apply_hints(apply_ost(mf, sc), rs, parse_hints("at-exit: x <= 0 \\/ x >= 0",
                                                               load("gamble")[0]), ctx)
    assert "Pr[" not in str(hinted)


def test_solve_with_known_fact_and_residual_without():
    _, rs, mf, ctx, sc, hs = pipeline("gamble2")
    hinted, _ = apply_hints(apply_ost(mf, sc), rs, hs, ctx)
    alone = solve_for(hinted)
    assert alone.status == RESIDUAL
    known = read_facts("Pr[x@tau = b] = a/b\n", rs)
    solved = solve_for(hinted, known=known)
    assert solved.status == SOLVED and solved.closed_form == parse_closed_form("a*(b - a)")


def test_relational_solution_for_momentum():
    _, rs, mf, ctx, sc, hs = pipeline("momentum")
    hinted, _ = apply_hints(apply_ost(mf, sc, assume=True), rs, hs, ctx)
    solved = solve_for(hinted)
    assert solved.status == SOLVED
    assert str(solved) == "E[x@tau] = E[x@(tau-1)]"


def test_target_must_occur():
    _, rs, mf, ctx, sc, hs = pipeline("geom")
    hinted, _ = apply_hints(apply_ost(mf, sc), rs, hs, ctx)
    with pytest.raises(OSTError):
        solve_for(hinted, parse_symexpr("E[x@tau^2]"))


def test_fact_file_round_trip():
    _, rs, *_ = pipeline("gamble")
    fact = Fact(parse_symexpr("Pr[x@tau = b]"), parse_symexpr("0"), SOLVED,
                parse_symexpr("Pr[x@tau = b]"), parse_closed_form("a/b"))
    text = write_fact(fact)
    assert text == "Pr[x@tau = b] = a/b\n"
    (atom, value), = read_facts(text, rs).items()
    assert value == parse_closed_form("a/b")


@pytest.mark.parametrize("text", ["Pr[x@tau = b]\n", "E[tau] = x@tau\n", "a = a/b\n"])
def test_malformed_fact_files(text):
    _, rs, *_ = pipeline("gamble")
    with pytest.raises(OSTError):
        read_facts(text, rs)


def test_analysis_statuses(analyses):
    assert {k: a.status for k, a in analyses.items()} == {
        "geom": "solved", "gamble": "solved", "gamble2": "solved", "momentum": "solved",
        "miniabra": "solved", "fullabra": "solved"}
    assert analyses["momentum"].side.assumed


def test_refused_analysis_exit_code(tmp_path):
    src = (load.__globals__["PROGRAMS"] / "momentum.spp").read_text()
    p = tmp_path / "m.spp"
    p.write_text(src.replace("#assume-ost\n", ""))
    res = analyze(AnalysisRequest(str(p)))
    assert res.status == "refused" and res.exit_code == 3
    assert analyze(AnalysisRequest(str(p), assume_ost=True)).exit_code == 0
