from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belief_arena.almost_sure import solve, synthesize_as_p1, synthesize_positive_p2
from belief_arena.arena import (CERTIFIED_SAFE, HORIZON_EXHAUSTED, TARGET_REACHED,
                                StepRecord, check_belief_invariants, counter_uniform,
                                estimate_reach, run_episode, wilson_interval)
from belief_arena.errors import GameInputError
from belief_arena.generate import random_strategy
from belief_arena.strategy import uniform_random_strategy
from strategies import games


def uniform_pair(spec):
    return uniform_random_strategy(spec, 1), uniform_random_strategy(spec, 2)


def test_counter_uniform_is_pure():
    a = counter_uniform(7, np.arange(5), 3, 1)
    assert np.array_equal(a, counter_uniform(7, np.arange(5), 3, 1))
    assert not np.array_equal(a, counter_uniform(7, np.arange(5), 3, 2))
    assert ((a >= 0) & (a < 1)).all()
    assert counter_uniform(7, [3], 3, 1)[0] == a[3]


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)


def test_coin_is_half(coin):
    rep = estimate_reach(coin, *uniform_pair(coin), ["s"], 4000, 50, seed=1)
    assert rep.within(0.5, 3)
    assert rep.belief_violations == 0
    assert rep.horizon_count == rep.avoid_count
    assert rep.mean_reach_step == 1.0


def test_coin_full_budget(coin):
    rep = estimate_reach(coin, *uniform_pair(coin), ["s"], 10_000, 20, seed=0)
    assert rep.within(0.5, 3)


def test_pennies_uniform_play_wins_eventually(pennies):
    rep = estimate_reach(pennies, *uniform_pair(pennies), ["init"], 2000, 1000, seed=8)
    assert rep.gamma1_hat >= 0.99


def test_safe_never_reaches(safe):
    rep = estimate_reach(safe, *uniform_pair(safe), ["s"], 500, 30, seed=2)
    assert rep.reach_count == 0
    assert rep.horizon_count == 500
    assert rep.truncated


def test_pennies_as_strategy_always_wins(pennies):
    sigma = synthesize_as_p1(pennies, solve(pennies), ["init"])
    rep = estimate_reach(pennies, sigma, uniform_random_strategy(pennies, 2), ["init"],
                         2000, 200, seed=3)
    assert rep.reach_count == 2000
    assert rep.belief_violations == 0


def test_certificate_stops_coin_at_step_one(coin):
    cert = solve(coin).positive.sure_p2
    for e in range(20):
        tr = run_episode(coin, *uniform_pair(coin), ["s"], 10, seed=4, episode_index=e,
                         certificate=cert)
        assert tr.outcome in (TARGET_REACHED, CERTIFIED_SAFE)
        assert tr.outcome_step == 1 and len(tr.steps) == 1


def test_certificate_counts_in_report(trap):
    chain = solve(trap, full_lattice=True)
    tau = synthesize_positive_p2(trap, chain, ["init"])
    rep = estimate_reach(trap, uniform_random_strategy(trap, 1), tau, ["init"], 1000, 100,
                         seed=5, certificate=chain.positive.sure_p2)
    assert rep.reach_count + rep.certified_safe_count + rep.horizon_count == 1000
    assert rep.certified_safe_count > 0


def test_forged_trace_is_caught(pennies):
    tr = run_episode(pennies, *uniform_pair(pennies), ["init"], 10, seed=6)
    assert check_belief_invariants(pennies, tr, ["init"]) == []
    first = tr.steps[0]
    wrong = "hR" if first.state == "hL" else "hL"
    forged = replace(tr, steps=(StepRecord(first.action1, first.action2, first.signal1,
                                           first.signal2, wrong),) + tr.steps[1:])
    names = {name for step, name, _s in check_belief_invariants(pennies, forged, ["init"])
             if step == 1}
    assert "B2" in names and "P2" in names


def test_wrong_initial_state_is_caught(pennies):
    tr = run_episode(pennies, *uniform_pair(pennies), ["init"], 5, seed=6)
    assert check_belief_invariants(pennies, tr, ["hL"])[0][:2] == (0, "initial")


def test_pessimistic_exempt_after_target(pennies):
    sigma = synthesize_as_p1(pennies, solve(pennies), ["init"])
    tr = run_episode(pennies, sigma, uniform_random_strategy(pennies, 2), ["init"], 20, seed=7)
    assert tr.reached
    # keep playing past the visit: the absorbing target stays inside B1/B2 only
    last = tr.steps[-1]
    extra = tr.steps + (StepRecord(last.action1, last.action2,
                                   pennies.signals_of(1, last.action1)[0],
                                   pennies.signals_of(2, last.action2)[0], "win"),)
    assert check_belief_invariants(pennies, replace(tr, steps=extra), ["init"]) == []


def test_rejects_bad_inputs(pennies):
    sigma, tau = uniform_pair(pennies)
    with pytest.raises(GameInputError):
        estimate_reach(pennies, sigma, tau, ["init"], 0, 10, seed=0)
    with pytest.raises(GameInputError):
        estimate_reach(pennies, tau, sigma, ["init"], 10, 10, seed=0)
    with pytest.raises(GameInputError):
        estimate_reach(pennies, sigma, tau, {"init": 0.5}, 10, 10, seed=0)


def test_horizon_outcome_has_no_step(safe):
    tr = run_episode(safe, *uniform_pair(safe), ["s"], 3, seed=0)
    assert tr.outcome == HORIZON_EXHAUSTED and tr.outcome_step is None
    assert len(tr.steps) == 3


# -- determinism --------------------------------------------------------------------

def test_same_seed_same_report(trap):
    args = (trap, *uniform_pair(trap), ["init"], 3000, 40)
    assert estimate_reach(*args, seed=11) == estimate_reach(*args, seed=11)
    assert estimate_reach(*args, seed=11) != estimate_reach(*args, seed=12)


@settings(max_examples=25)
@given(games, st.integers(0, 1000))
def test_single_episode_matches_batch(spec, seed):
    sigma = random_strategy(spec, 1, seed)
    tau = random_strategy(spec, 2, seed + 1)
    init = spec.members(spec.initial_support())
    rep = estimate_reach(spec, sigma, tau, init, 30, 25, seed)
    reached = sum(run_episode(spec, sigma, tau, init, 25, seed, e).reached for e in range(30))
    assert reached == rep.reach_count
    assert rep.belief_violations == 0


@settings(max_examples=25)
@given(games, st.integers(0, 1000))
def test_traces_respect_beliefs(spec, seed):
    sigma, tau = uniform_pair(spec)
    init = spec.members(spec.initial_support())
    for e in range(5):
        tr = run_episode(spec, sigma, tau, init, 15, seed, e)
        assert check_belief_invariants(spec, tr, init) == []


def test_episode_independent_of_batch_order(coin):
    sigma, tau = uniform_pair(coin)
    a = [run_episode(coin, sigma, tau, ["s"], 5, 9, e).outcome for e in (4, 1, 3)]
    b = [run_episode(coin, sigma, tau, ["s"], 5, 9, e).outcome for e in (1, 3, 4)]
    assert sorted(a) == sorted(b)
    assert a[0] == b[2]
