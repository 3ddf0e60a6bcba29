"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
The lines are printed as they are produced and again in the pytest summary.
"""

from __future__ import annotations

import sys
import time

import pytest

from belief_arena.almost_sure import (ThreeWayClass, allowed_action_strategy, solve,
                                      synthesize_as_p1, synthesize_positive_p2)
from belief_arena.arena import estimate_reach
from belief_arena.formats import write_classification_report
from belief_arena.generate import (Profile, generate_random_game, generate_revealing_game,
                                   random_strategy)
from belief_arena.oracle import (losing_supports_least_fixpoint, perfect_info_solver,
                                 reach_value_vectors)
from belief_arena.positive import positive_partition, synthesize_sure_p2
from belief_arena.strategy import uniform_random_strategy
from conftest import ACCEPTANCE_LINES, FIXTURES, fixture_game

pytestmark = pytest.mark.slow

N_GAMES = 300
EPISODES = 10_000
SURE_HORIZON = 200
LONG_HORIZON = 1_000
N_ADVERSARIES = 20
Z = 3.0

AS, SURE, BOTH = ThreeWayClass.ALMOST_SURE_P1, ThreeWayClass.SURE_P2, ThreeWayClass.POSITIVE_BOTH


def record(n: int, ok: bool, text: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[n] = line
    print(line, flush=True)


class Corpus:
    """Generated games plus the fixtures, each solved once over the full lattice."""

    def __init__(self):
        self.games = [fixture_game(name) for name in FIXTURES]
        self.games += [generate_random_game(Profile(), seed) for seed in range(N_GAMES)]
        self.full = [solve(g, full_lattice=True) for g in self.games]
        self.sims = {"violations": 0, "episodes": 0}

    def initial(self, n):
        spec = self.games[n]
        return spec.initial_support() & spec.nontarget_mask

    def simulate(self, spec, sigma, tau, init, horizon, seed, certificate=None):
        rep = estimate_reach(spec, sigma, tau, list(spec.members(init)), EPISODES, horizon,
                             seed, certificate=certificate)
        self.sims["violations"] += rep.belief_violations
        self.sims["episodes"] += rep.episodes
        return rep


@pytest.fixture(scope="module")
def corpus():
    return Corpus()


def test_c01_oracle_duality(corpus):
    t0 = time.perf_counter()
    mismatches = 0
    for spec in corpus.games:
        sure = positive_partition(spec, [], full_lattice=True).sure_p2.elements
        losing = losing_supports_least_fixpoint(spec).elements
        mismatches += len(sure ^ (set(spec.lattice()) - losing))
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 300
    record(1, ok, f"oracle duality: {mismatches} mismatches over {len(corpus.games)} games, "
                  f"{dt:.2f} s (limit 300 s)")
    assert ok


def test_c02_determinacy_partition(corpus):
    bad = []
    supports = 0
    for spec, chain in zip(corpus.games, corpus.full):
        sure = positive_partition(spec, [], full_lattice=True).sure_p2.elements
        for m in spec.lattice():
            supports += 1
            cls = chain.classes.get(m)
            if cls not in (AS, SURE, BOTH):
                bad.append((spec.name, m, "unclassified"))
            elif cls is AS and m in sure:
                bad.append((spec.name, m, "almost-sure but surely safe"))
            elif cls is SURE and (m not in chain.limit or m not in sure):
                bad.append((spec.name, m, "sure outside the limit family"))
            elif cls is BOTH and m in sure:
                bad.append((spec.name, m, "positive_both but surely safe"))
        if set(chain.classes) != set(spec.lattice()):
            bad.append((spec.name, None, "class map does not cover the lattice"))
    record(2, not bad, f"determinacy partition: {len(bad)} violations over {supports} supports")
    assert not bad, bad[:5]


def test_c03_locality(corpus):
    bad = []
    for spec, chain in zip(corpus.games, corpus.full):
        whole_sure = positive_partition(spec, [], full_lattice=True).sure_p2.elements
        for m in spec.lattice():
            local = solve(spec, [m])
            if local.classify(m) is not chain.classify(m):
                bad.append((spec.name, spec.format_support(m)))
            if (m in positive_partition(spec, [m]).sure_p2) != (m in whole_sure):
                bad.append((spec.name, spec.format_support(m), "positive"))
    record(3, not bad, f"locality: {len(bad)} disagreements between closure and full lattice")
    assert not bad, bad[:5]


def test_c04_sure_witness(corpus):
    runs = reached = 0
    for n, spec in enumerate(corpus.games):
        init = corpus.initial(n)
        chain = solve(spec, [init])
        if chain.classify(init) is not SURE:
            continue
        tau = synthesize_sure_p2(spec, positive_partition(spec, [init]), init)
        for sigma in (uniform_random_strategy(spec, 1),
                      allowed_action_strategy(spec, chain, [init])):
            rep = corpus.simulate(spec, sigma, tau, init, SURE_HORIZON, seed=4000 + n)
            runs += 1
            reached += rep.reach_count
    ok = runs > 0 and reached == 0
    record(4, ok, f"sure-safety witness: {reached} target visits in {runs} runs x "
                  f"{EPISODES} episodes, horizon {SURE_HORIZON}")
    assert ok


def test_c05_almost_sure_witness(corpus):
    worst = 1.0
    runs = 0
    failures = []
    for n, spec in enumerate(corpus.games):
        init = corpus.initial(n)
        chain = solve(spec, [init])
        if chain.classify(init) is not AS:
            continue
        sigma = synthesize_as_p1(spec, chain, init)
        suite = [uniform_random_strategy(spec, 2)]
        suite += [random_strategy(spec, 2, seed=100_000 * n + k) for k in range(N_ADVERSARIES)]
        for k, tau in enumerate(suite):
            rep = corpus.simulate(spec, sigma, tau, init, LONG_HORIZON, seed=5000 + 31 * n + k)
            runs += 1
            worst = min(worst, rep.gamma1_hat)
            if rep.gamma1_hat < 0.99:
                failures.append((spec.name, k, rep.gamma1_hat))
    ok = runs > 0 and not failures
    record(5, ok, f"almost-sure witness: worst reach {worst:.4f} (need >= 0.99) over {runs} "
                  f"runs x {EPISODES} episodes, horizon {LONG_HORIZON}")
    assert ok, failures[:5]


def test_c06_positive_witnesses(corpus):
    notes = []
    ok = True
    for name in ("g_coin", "g_pennies_trap"):
        n = FIXTURES.index(name)
        spec = corpus.games[n]
        init = corpus.initial(n)
        chain = solve(spec, [init])
        sigma, tau0 = uniform_random_strategy(spec, 1), uniform_random_strategy(spec, 2)
        tau = synthesize_positive_p2(spec, chain, init)
        cert = chain.positive.sure_p2
        reach = corpus.simulate(spec, sigma, tau0, init, LONG_HORIZON, seed=6000 + n)
        avoid = corpus.simulate(spec, sigma, tau, init, LONG_HORIZON, seed=6100 + n,
                                certificate=cert)
        good = reach.within(0.5, Z) and avoid.within(0.5, Z)
        ok &= good
        notes.append(f"{name} reach {reach.gamma1_hat:.4f} avoid "
                     f"{avoid.avoid_count / avoid.episodes:.4f}")
    both = 0
    for n, spec in enumerate(corpus.games):
        init = corpus.initial(n)
        chain = solve(spec, [init])
        if chain.classify(init) is not BOTH:
            continue
        both += 1
        rep = corpus.simulate(spec, uniform_random_strategy(spec, 1),
                              synthesize_positive_p2(spec, chain, init), init, LONG_HORIZON,
                              seed=6200 + n, certificate=chain.positive.sure_p2)
        if rep.reach_count < 1 or rep.avoid_count < 1:
            ok = False
            notes.append(f"{spec.name} reach {rep.reach_count} avoid {rep.avoid_count}")
    record(6, ok, f"positive witnesses (z={Z:g}): {'; '.join(notes)}; "
                  f"{both} positive_both supports checked")
    assert ok


def test_c07_bounded_witness(corpus):
    failures = []
    checked = 0
    for spec, chain in zip(corpus.games, corpus.full):
        value = reach_value_vectors(spec, 2 ** len(spec.states))
        for m in spec.lattice():
            if m in chain.positive.sure_p2:
                continue
            checked += 1
            if not value(m) > 0:
                failures.append((spec.name, spec.format_support(m)))
    record(7, not failures, f"bounded witness: {len(failures)} failures over {checked} "
                            f"positive supports at horizon 2^|K|")
    assert not failures, failures[:5]


def test_c08_belief_invariants(corpus):
    if not corpus.sims["episodes"]:
        pytest.skip("criteria 4 to 6 did not run")
    v = corpus.sims["violations"]
    record(8, v == 0, f"belief invariants: {v} violations in {corpus.sims['episodes']} "
                      f"simulated episodes")
    assert v == 0


def test_c09_chain_structure(corpus):
    bad = []
    for spec, chain in zip(corpus.games, corpus.full):
        lat = spec.lattice()
        levels = chain.levels
        if levels[0].elements:
            bad.append((spec.name, "first level nonempty"))
        if levels[-1].elements != levels[-2].elements:
            bad.append((spec.name, "not stabilized"))
        if len(levels) - 1 > len(chain.examined) + 1:
            bad.append((spec.name, "too many iterations"))
        for lo, hi in zip(levels, levels[1:]):
            if not lo.elements <= hi.elements:
                bad.append((spec.name, "not increasing"))
        for lv in levels:
            if not lv.is_upward_closed(lat):
                bad.append((spec.name, "not upward-closed"))
    record(9, not bad, f"chain structure: {len(bad)} violations over {len(corpus.games)} games")
    assert not bad, bad[:5]


def test_c10_perfect_information():
    bad = []
    for seed in range(50):
        spec = generate_revealing_game(1 + seed % 4, seed)
        pi = perfect_info_solver(spec)
        chain = solve(spec, [[s] for s in spec.states])
        for s in spec.states:
            if chain.classify([s]).value != pi[s]:
                bad.append((spec.name, s))
    record(10, not bad, f"perfect-information agreement: {len(bad)} disagreements on 50 games")
    assert not bad, bad[:5]


def _pipeline(spec) -> float:
    t0 = time.perf_counter()
    init = spec.initial_support() & spec.nontarget_mask
    chain = solve(spec, [init])
    cls = chain.classify(init)
    if cls is AS:
        synthesize_as_p1(spec, chain, init)
    elif cls is SURE:
        synthesize_sure_p2(spec, positive_partition(spec, [init]), init)
    else:
        synthesize_positive_p2(spec, chain, init)
    write_classification_report(chain, chain.positive)
    return time.perf_counter() - t0


def test_c11_performance(corpus):
    worst = max(_pipeline(spec) for spec in corpus.games)
    big = [generate_random_game(Profile(states=5, exact_sizes=True), seed) for seed in range(20)]
    worst5 = max(_pipeline(spec) for spec in big)
    ok = worst < 60 and worst5 < 600
    record(11, ok, f"performance: worst corpus game {worst:.3f} s (limit 60 s), "
                   f"worst |K-T|=5 game {worst5:.3f} s (limit 600 s)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
