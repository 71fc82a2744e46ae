"""Simulator: exact sampling, determinism, trial-range merging and validation verdicts."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load

from doobsynth import distributions as D
from doobsynth.montecarlo import (SimConfig, SimulationError, Sampler, Stats, estimate,
                                  increment_fn,
                                  interpret, uniform64, validate)
from doobsynth.doob import doob_decompose
from doobsynth.parser import parse_program
from doobsynth.recurrence import lift_seed
from doobsynth.symbolic.expr import Expect, Poly, TimeVar, param, proc
from doobsynth.symbolic.parse import parse_symexpr

TAU = Poly.atom(TimeVar("tau"))
GAMBLER = {"a": Fraction(3), "b": Fraction(10)}


def test_sampler_thresholds_are_exact():
    d = D.table([((1,), Fraction(1, 3)), ((2,), Fraction(1, 6)), ((3,), Fraction(1, 2))])
    s = Sampler(d, {})
    assert [int(t) for t in s.thresholds] == [(1 << 64) // 3, (1 << 63)]
    assert s.point_index(0) == 0
    assert s.point_index((1 << 64) // 3 - 1) == 0
    assert s.point_index((1 << 64) // 3) == 1
    assert s.point_index((1 << 64) - 1) == 2


def test_sampler_frequencies():
    s = Sampler(D.bern(param("p"), 1, 0), {"p": Fraction(1, 4)})
    u = uniform64(7, np.arange(200_000, dtype=np.uint64), 0, 0)
    (vals,) = s.draw(u)
    freq = vals.mean()
    assert abs(freq - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 200_000)


def test_uniform_stream_is_counter_based():
    trials = np.arange(10, dtype=np.uint64)
    a = uniform64(1, trials, 3, 0)
    b = uniform64(1, trials[::-1], 3, 0)[::-1]
    assert (a == b).all()
    assert not (a == uniform64(1, trials, 3, 1)).any()
    assert not (a == uniform64(2, trials, 3, 0)).any()


@settings(max_examples=50)
@given(st.lists(st.integers(-50, 50), min_size=0, max_size=20),
       st.lists(st.integers(-50, 50), min_size=0, max_size=20))
def test_stats_merge_equals_pooled(xs, ys):
    assert Stats.of(xs) + Stats.of(ys) == Stats.of(xs + ys)


def test_stats_moments():
    s = Stats.of([1, 2, 3, 4])
    assert s.mean == Fraction(5, 2) and s.variance == Fraction(5, 3)


def test_identical_config_gives_identical_report():
    prog, _ = load("gamble")
    cfg = SimConfig(GAMBLER, trials=3000, seed=11)
    r1, _ = estimate(prog, cfg, {"tau": TAU, "x": proc("x", "tau")})
    r2, _ = estimate(prog, cfg, {"tau": TAU, "x": proc("x", "tau")})
    assert r1 == r2
    r3, _ = estimate(prog, SimConfig(GAMBLER, trials=3000, seed=12), {"tau": TAU})
    assert r3.quantities["tau"] != r1.quantities["tau"]


@pytest.mark.parametrize("k", [2, 3, 7])
def test_disjoint_trial_ranges_merge_to_single_run(k):
    prog, _ = load("geom")
    cfg = SimConfig({"p": Fraction(1, 3)}, trials=2000, seed=5)
    whole, _ = estimate(prog, cfg, {"tau": TAU})
    parts = [estimate(prog, c, {"tau": TAU})[0] for c in cfg.split(k)]
    merged = parts[0]
    for p in parts[1:]:
        merged = merged + p
    assert merged == whole


def test_simulated_trace_matches_interpreter():
    """Replay the simulator's draws through the scalar interpreter."""
    prog, rs = load("gamble")
    cfg = SimConfig(GAMBLER, trials=50, seed=3)
    _, vals = estimate(prog, cfg, {"tau": TAU, "x": proc("x", "tau")})
    s = Sampler(rs.dists["z"], GAMBLER)
    steps = np.arange(2000)
    for trial in range(50):
        ids = np.array([trial], dtype=np.uint64)
        draws = [{"z": s.points[s.point_index(int(uniform64(cfg.seed, ids, int(k), 0)[0]))][0]}
                 for k in steps]
        states = interpret(prog, GAMBLER, draws, check_guard=True)
        assert len(states) < len(draws)
        tau, x = vals["tau"][trial], vals["x"][trial]
        assert Fraction(int(tau.num), tau.den) == rs.m - 1 + len(states) - 1
        assert Fraction(int(x.num), x.den) == states[-1]["x"]


def test_correct_fact_passes_and_corrupted_fact_fails():
    prog, rs = load("gamble")
    cfg = SimConfig(GAMBLER, trials=20_000, seed=1)
    pr = parse_symexpr("Pr[x@tau = b]")
    good = validate(pr, Poly.const(Fraction(3, 10)), prog, cfg)
    bad = validate(pr, Poly.const(Fraction(4, 10)), prog, cfg)
    assert good.passed and bad.status == "FAIL"


def test_censoring_aborts_validation():
    prog = parse_program("x[0] := 0;\nwhile (x < 1000000) do\n  z ~ Bern(1/2, {1, -1});\n"
                         "  x := x[-1] + z;\nend\n")
    cfg = SimConfig({}, trials=200, seed=1, max_steps=50)
    with pytest.warns(RuntimeWarning):
        v = validate(Poly.atom(Expect(TAU)), Poly.const(0), prog, cfg)
    assert v.status == "ABORTED" and v.censored == 200


def test_parameter_checks():
    prog, _ = load("gamble")
    with pytest.raises(SimulationError):
        estimate(prog, SimConfig({"a": Fraction(12), "b": Fraction(10)}, trials=10), {"t": TAU})
    with pytest.raises(SimulationError):
        estimate(prog, SimConfig({"a": Fraction(3, 2), "b": Fraction(10)}, trials=10),
                 {"t": TAU})
    with pytest.raises(SimulationError):
        estimate(prog, SimConfig({"a": Fraction(3)}, trials=10), {"t": TAU})


def test_increment_bound_monitor_counts_violations():
    prog, rs = load("gamble")
    mf = doob_decompose(rs, lift_seed(rs, prog.pragmas.seed))
    cfg = SimConfig(GAMBLER, trials=500, seed=2)
    ok, _ = estimate(prog, cfg, {"t": TAU}, increment=increment_fn(mf.increment), increment_bound=Fraction(1))
    assert ok.increment_violations == 0 and ok.max_increment == 1
    tight, _ = estimate(prog, cfg, {"t": TAU}, increment=increment_fn(mf.increment),
                        increment_bound=Fraction(1, 2))
    assert tight.increment_violations == tight.increments_checked > 0


def test_exit_index_convention():
    """tau is the absolute index of the last written state, so at least m."""
    prog, rs = load("momentum")
    _, vals = estimate(prog, SimConfig(GAMBLER, trials=200, seed=4), {"tau": TAU})
    taus = vals["tau"]
    assert taus.den == 1 and int(np.min(taus.num)) >= rs.m
