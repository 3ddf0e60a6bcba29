"""Seeded Monte-Carlo simulation of plays.

Every random draw comes from a counter-based generator keyed by
``(seed, episode, step, role)``, so an episode's play does not depend on which
other episodes run alongside it or in which order.  The batch engine advances
all live episodes one step at a time with numpy and, unless disabled, folds
both players' plain and pessimistic beliefs to check that the true state is
always among them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import GameInputError
from .game import PROB_TOL, GameSpec, SupportFamily, bits
from .strategy import FiniteMemoryStrategy, init_strategy

# outcomes
RUNNING = "running"
TARGET_REACHED = "target-reached"
HORIZON_EXHAUSTED = "horizon-exhausted"
CERTIFIED_SAFE = "certified-safe"
_OUTCOMES = (RUNNING, TARGET_REACHED, HORIZON_EXHAUSTED, CERTIFIED_SAFE)

# draw roles
ROLE_INIT, ROLE_ACT1, ROLE_ACT2, ROLE_MOVE, ROLE_MEM1, ROLE_MEM2 = range(6)

_M64 = (1 << 64) - 1


def _mix(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def counter_uniform(seed: int, episode, step: int, role: int) -> np.ndarray:
    """Uniform draws in [0, 1) for an array of episode indices."""
    ep = np.atleast_1d(np.asarray(episode, dtype=np.uint64))
    key = np.full(ep.shape, seed & _M64, dtype=np.uint64)
    x = _mix(key + (ep + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15))
    x = _mix(x ^ np.uint64(((step & 0xFFFFFFFF) << 8 | role) * 0xD6E8FEB86659FD93 & _M64))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class StepRecord:
    action1: str
    action2: str
    signal1: str
    signal2: str
    state: str


@dataclass(frozen=True)
class EpisodeTrace:
    initial: str
    steps: tuple
    outcome: str
    outcome_step: int | None = None
    episode: int = 0

    @property
    def reached(self) -> bool:
        return self.outcome == TARGET_REACHED


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple:
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass(frozen=True)
class SimulationReport:
    episodes: int
    reach_count: int
    certified_safe_count: int
    horizon_count: int
    seed: int
    horizon: int
    belief_violations: int = 0
    mean_reach_step: float | None = None
    violation_samples: tuple = field(default=(), compare=False)

    @property
    def gamma1_hat(self) -> float:
        return self.reach_count / self.episodes

    @property
    def avoid_count(self) -> int:
        return self.episodes - self.reach_count

    @property
    def confidence_interval(self) -> tuple:
        return wilson_interval(self.reach_count, self.episodes)

    @property
    def truncated(self) -> bool:
        """Some episodes stopped at the horizon without a verdict."""
        return self.horizon_count > 0

    def within(self, value: float, z: float) -> bool:
        lo, hi = wilson_interval(self.reach_count, self.episodes, z)
        return lo <= value <= hi

    def as_dict(self) -> dict:
        lo, hi = self.confidence_interval
        return {"episodes": self.episodes, "reach_count": self.reach_count,
                "gamma1_hat": self.gamma1_hat, "ci95": [lo, hi],
                "certified_safe_count": self.certified_safe_count,
                "horizon_exhausted_count": self.horizon_count,
                "truncated": self.truncated, "seed": self.seed,
                "horizon": self.horizon, "belief_violations": self.belief_violations}


# -- tables ---------------------------------------------------------------------

def _distribution(spec: GameSpec, delta) -> dict:
    if isinstance(delta, int):
        delta = {s: Fraction(1, len(spec.members(delta))) for s in spec.members(delta)}
    elif not isinstance(delta, Mapping):
        names = list(delta)
        delta = {s: Fraction(1, len(names)) for s in names}
    out = {}
    for s, p in delta.items():
        if s not in spec.state_index:
            raise GameInputError(f"unknown state {s!r} in initial distribution")
        if p < 0:
            raise GameInputError(f"negative weight for {s!r}")
        if p > 0:
            out[s] = p
    if not out:
        raise GameInputError("initial distribution has empty support")
    if abs(float(sum(out.values())) - 1.0) > PROB_TOL:
        raise GameInputError(f"initial distribution sums to {float(sum(out.values()))}")
    return out


class _GameTables:
    def __init__(self, spec: GameSpec):
        nk, ni, nj = len(spec.states), len(spec.actions1), len(spec.actions2)
        width = max(len(cell) for row in spec.outcomes for cells in row for cell in cells)
        self.cum = np.full((nk, ni, nj, width), np.inf)
        self.prob = np.zeros((nk, ni, nj, width))
        self.c = np.zeros((nk, ni, nj, width), dtype=np.int64)
        self.d = np.zeros((nk, ni, nj, width), dtype=np.int64)
        self.l = np.zeros((nk, ni, nj, width), dtype=np.int64)
        for k in range(nk):
            for i in range(ni):
                for j in range(nj):
                    acc = 0.0
                    cell = spec.outcomes[k][i][j]
                    for w, (p, c, d, l) in enumerate(cell):
                        acc += float(p)
                        self.cum[k, i, j, w] = acc
                        self.prob[k, i, j, w] = float(p)
                        self.c[k, i, j, w], self.d[k, i, j, w], self.l[k, i, j, w] = c, d, l
                    self.cum[k, i, j, len(cell) - 1] = np.inf
        self.post1 = np.array([[spec.post(1, c)[n] for n in range(nk)] for c in spec.signals1],
                              dtype=np.int64)
        self.post2 = np.array([[spec.post(2, d)[n] for n in range(nk)] for d in spec.signals2],
                              dtype=np.int64)
        self.target = np.array([s in spec.targets for s in spec.states])
        self.nt = spec.nontarget_mask
        self.nk = nk


def _belief_step(post: np.ndarray, belief: np.ndarray, sig: np.ndarray, nk: int) -> np.ndarray:
    out = np.zeros_like(belief)
    rows = post[sig]
    for n in range(nk):
        out |= np.where((belief >> n) & 1 == 1, rows[:, n], 0)
    return out


def _bind(spec: GameSpec, strategy: FiniteMemoryStrategy, player: int):
    if strategy.player != player:
        raise GameInputError(f"strategy for player {strategy.player} given as player {player}")
    own = spec.actions(player)
    if not set(strategy.actions) <= set(own):
        raise GameInputError(f"strategy of player {player} uses unknown actions")
    if set(strategy.signals) != set(spec.signals(player)):
        raise GameInputError(f"strategy of player {player} expects other signals")
    act_map = np.array([own.index(a) for a in strategy.actions], dtype=np.int64)
    sig_map = np.array([strategy.signals.index(s) for s in spec.signals(player)], dtype=np.int64)
    return strategy.compiled, act_map, sig_map


# -- engine ---------------------------------------------------------------------

def _simulate(spec, sigma, tau, delta, episodes, horizon, seed, certificate=None,
              check=True, record=False, chunk=20000):
    if horizon < 1:
        raise GameInputError("horizon must be at least 1")
    delta = _distribution(spec, delta)
    support = sorted(delta, key=spec.state_index.get)
    init_mask = spec.mask(support)
    comp1, amap1, smap1 = _bind(spec, sigma, 1)
    comp2, amap2, smap2 = _bind(spec, tau, 2)
    m1_0 = sigma.index[init_strategy(sigma, support)]
    m2_0 = tau.index[init_strategy(tau, support)]
    tab = _GameTables(spec)
    init_idx = np.array([spec.state_index[s] for s in support], dtype=np.int64)
    init_cum = np.cumsum([float(delta[s]) for s in support])
    init_cum[-1] = np.inf
    cert = None
    if certificate is not None:
        members = certificate.elements if isinstance(certificate, SupportFamily) else certificate
        cert = np.array(sorted(members), dtype=np.int64)
    episodes = np.asarray(episodes, dtype=np.int64)
    n = len(episodes)
    outcome = np.zeros(n, dtype=np.int8)
    at = np.full(n, -1, dtype=np.int64)
    first = np.empty(n, dtype=np.int64)
    violations = np.zeros(n, dtype=np.int64)
    steps = [[] for _ in range(n)] if record else None
    nt = tab.nt
    for lo in range(0, n, chunk):
        idx = np.arange(lo, min(n, lo + chunk))
        ep = episodes[idx].astype(np.uint64)
        u = counter_uniform(seed, ep, 0, ROLE_INIT)
        k = init_idx[(u[:, None] < init_cum).argmax(axis=1)]
        first[idx] = k
        m1 = np.full(len(idx), m1_0, dtype=np.int64)
        m2 = np.full(len(idx), m2_0, dtype=np.int64)
        b1 = np.full(len(idx), init_mask, dtype=np.int64)
        b2 = b1.copy()
        p1 = b1.copy()
        p2 = b1.copy()
        hit = tab.target[k]
        outcome[idx[hit]] = 1
        at[idx[hit]] = 0
        live = ~hit
        if cert is not None:
            ok = live & _certified(p2 & nt, cert)
            outcome[idx[ok]] = 3
            at[idx[ok]] = 0
            live &= ~ok
        sel = np.nonzero(live)[0]
        idx, ep, k, m1, m2 = idx[sel], ep[sel], k[sel], m1[sel], m2[sel]
        b1, b2, p1, p2 = b1[sel], b2[sel], p1[sel], p2[sel]
        for t in range(1, horizon + 1):
            if not len(idx):
                break
            i = amap1[comp1.actions(m1, counter_uniform(seed, ep, t, ROLE_ACT1))]
            j = amap2[comp2.actions(m2, counter_uniform(seed, ep, t, ROLE_ACT2))]
            u = counter_uniform(seed, ep, t, ROLE_MOVE)
            w = (u[:, None] < tab.cum[k, i, j]).argmax(axis=1)
            if not np.all(tab.prob[k, i, j, w] > 0):
                raise AssertionError("sampled a transition of probability zero")
            c, d, l = tab.c[k, i, j, w], tab.d[k, i, j, w], tab.l[k, i, j, w]
            if record:
                for n_, e in enumerate(idx):
                    steps[e].append((i[n_], j[n_], c[n_], d[n_], l[n_]))
            if check:
                b1 = _belief_step(tab.post1, b1, c, tab.nk)
                b2 = _belief_step(tab.post2, b2, d, tab.nk)
                p1 = _belief_step(tab.post1, p1 & nt, c, tab.nk)
                p2 = _belief_step(tab.post2, p2 & nt, d, tab.nk)
                inside = ((b1 >> l) & (b2 >> l) & (p1 >> l) & (p2 >> l) & 1).astype(bool)
                violations[idx[~inside]] += 1
            elif cert is not None:
                p2 = _belief_step(tab.post2, p2 & nt, d, tab.nk)
            m1 = comp1.step(m1, smap1[c], counter_uniform(seed, ep, t, ROLE_MEM1))
            m2 = comp2.step(m2, smap2[d], counter_uniform(seed, ep, t, ROLE_MEM2))
            k = l
            hit = tab.target[k]
            outcome[idx[hit]] = 1
            at[idx[hit]] = t
            keep = ~hit
            if cert is not None:
                ok = keep & _certified(p2 & nt, cert)
                outcome[idx[ok]] = 3
                at[idx[ok]] = t
                keep &= ~ok
            if not keep.all():
                sel = np.nonzero(keep)[0]
                idx, ep, k, m1, m2 = idx[sel], ep[sel], k[sel], m1[sel], m2[sel]
                b1, b2, p1, p2 = b1[sel], b2[sel], p1[sel], p2[sel]
        outcome[idx] = 2
    return outcome, at, first, violations, steps


def _certified(belief: np.ndarray, members: np.ndarray) -> np.ndarray:
    if not len(members):
        return np.zeros(belief.shape, dtype=bool)
    return ((belief[:, None] & ~members[None, :]) == 0).any(axis=1)


def run_episode(spec: GameSpec, sigma: FiniteMemoryStrategy, tau: FiniteMemoryStrategy,
                delta, horizon: int, seed: int, episode_index: int = 0,
                certificate=None) -> EpisodeTrace:
    """Sample one play; identical to episode ``episode_index`` of
    :func:`estimate_reach` with the same arguments."""
    outcome, at, first, _viol, steps = _simulate(
        spec, sigma, tau, delta, [episode_index], horizon, seed, certificate,
        check=False, record=True)
    recs = tuple(StepRecord(spec.actions1[i], spec.actions2[j], spec.signals1[c],
                            spec.signals2[d], spec.states[l]) for i, j, c, d, l in steps[0])
    o = _OUTCOMES[int(outcome[0])]
    return EpisodeTrace(spec.states[int(first[0])], recs, o,
                        None if o == HORIZON_EXHAUSTED else int(at[0]), episode_index)


def estimate_reach(spec: GameSpec, sigma: FiniteMemoryStrategy, tau: FiniteMemoryStrategy,
                   delta, episodes: int, horizon: int, seed: int, certificate=None,
                   check_beliefs: bool = True) -> SimulationReport:
    """Run ``episodes`` independent plays and count target visits."""
    if episodes < 1:
        raise GameInputError("episodes must be at least 1")
    outcome, at, _first, viol, _ = _simulate(spec, sigma, tau, delta, np.arange(episodes),
                                             horizon, seed, certificate, check=check_beliefs)
    reached = outcome == 1
    mean = float(at[reached].mean()) if reached.any() else None
    bad = tuple(int(e) for e in np.nonzero(viol)[0][:10])
    return SimulationReport(
        episodes=int(episodes), reach_count=int(reached.sum()),
        certified_safe_count=int((outcome == 3).sum()),
        horizon_count=int((outcome == 2).sum()), seed=int(seed), horizon=int(horizon),
        belief_violations=int(viol.sum()), mean_reach_step=mean, violation_samples=bad)


def check_belief_invariants(spec: GameSpec, trace: EpisodeTrace, initial) -> list:
    """Steps at which the true state escapes a tracked belief.

    Plain beliefs of both players must always contain the state; pessimistic
    beliefs only until a target has been visited.  Each violation is
    ``(step, belief_name, state)``; step 0 checks the initial state.
    """
    from .game import belief_update, pessimistic_belief_update
    L = spec.mask(initial)
    out = []
    state = spec.state_index.get(trace.initial)
    if state is None or not L >> state & 1:
        out.append((0, "initial", trace.initial))
    b = {"B1": L, "B2": L, "P1": L, "P2": L}
    visited = state is not None and bool(spec.target_mask >> state & 1)
    for n, rec in enumerate(trace.steps, start=1):
        b["B1"] = belief_update(spec, 1, b["B1"], rec.signal1)
        b["B2"] = belief_update(spec, 2, b["B2"], rec.signal2)
        b["P1"] = pessimistic_belief_update(spec, 1, b["P1"], rec.signal1)
        b["P2"] = pessimistic_belief_update(spec, 2, b["P2"], rec.signal2)
        k = spec.state_index.get(rec.state)
        if k is None:
            out.append((n, "state", rec.state))
            continue
        for name in ("B1", "B2") + (() if visited else ("P1", "P2")):
            if not b[name] >> k & 1:
                out.append((n, name, rec.state))
        visited = visited or bool(spec.target_mask >> k & 1)
    return out
