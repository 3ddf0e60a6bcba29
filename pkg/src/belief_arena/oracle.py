"""Brute-force verifiers for small games.

Nothing here reuses the solvers' belief machinery: successor sets, values and
attractors are recomputed from the raw transition table so that agreement
between an oracle and a solver is evidence rather than tautology.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import GuardExceeded, Refusal
from .game import GameSpec, SupportFamily

ALMOST_SURE_P1 = "almost_sure_p1"
SURE_P2 = "sure_p2"
POSITIVE_BOTH = "positive_both"


def _player2_successors(spec: GameSpec) -> dict:
    """(state, signal of player 2) -> set of next states, from the raw table."""
    succ = {}
    for (k, _i, _j), outs in spec.trans.items():
        for p, _c, d, l in outs:
            if Fraction(p) > 0:
                succ.setdefault((k, d), set()).add(l)
    return succ


def losing_supports_least_fixpoint(spec: GameSpec, max_states: int = 4) -> SupportFamily:
    """Supports of non-target states from which player 2 cannot surely avoid
    the targets, built bottom-up by rank.

    A support enters at rank ``n+1`` when every action of player 2 has some
    signal whose next belief meets a target or already has rank ``<= n``.
    """
    free = [s for s in spec.states if s not in spec.targets]
    if len(free) > max_states:
        raise GuardExceeded(f"{len(free)} non-target states exceed the oracle guard of {max_states}")
    succ = _player2_successors(spec)
    lattice = [frozenset(c) for r in range(1, len(free) + 1) for c in combinations(free, r)]
    by_action = {}
    for d in spec.signals2:
        by_action.setdefault(spec.act[d], []).append(d)
    losing = set()
    changed = True
    while changed:
        changed = False
        new = set()
        for L in lattice:
            if L in losing:
                continue
            ok = True
            for j in spec.actions2:
                bad = False
                for d in by_action.get(j, ()):
                    nxt = frozenset(l for k in L for l in succ.get((k, d), ()))
                    if nxt and (nxt & spec.targets or nxt in losing):
                        bad = True
                        break
                if not bad:
                    ok = False
                    break
            if ok:
                new.add(L)
        if new:
            losing |= new
            changed = True
    pos = {s: n for n, s in enumerate(spec.states)}
    masks = frozenset(sum(1 << pos[s] for s in L) for L in losing)
    return SupportFamily(masks, "K-T")


# -- bounded min-max --------------------------------------------------------------

def _dominated(vec, others) -> bool:
    return any(all(o[n] <= vec[n] for n in range(len(vec))) for o in others)


def _never_minimal(vec, others, eps: float) -> bool:
    """True when ``vec`` is strictly above the lower envelope of ``others``
    everywhere on the simplex, by a margin the float LP cannot fake."""
    if not others:
        return False
    dim = len(vec)
    # variables: mu_0..mu_{dim-1}, margin; maximize margin
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0
    a_ub = np.array([[float(vec[n] - o[n]) for n in range(dim)] + [1.0] for o in others])
    b_ub = np.zeros(len(others))
    a_eq = np.array([[1.0] * dim + [0.0]])
    bounds = [(0, None)] * dim + [(None, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds,
                  method="highs")
    return res.status == 0 and -res.fun < -eps


def _prune(vectors, eps: float):
    uniq = sorted(set(vectors), key=lambda v: (sum(v), v))
    kept = []
    for v in uniq:
        if not _dominated(v, kept):
            kept = [w for w in kept if not all(v[n] <= w[n] for n in range(len(v)))]
            kept.append(v)
    if len(kept) <= 2:
        return kept
    out = list(kept)
    for v in kept:
        rest = [w for w in out if w is not v]
        if _never_minimal(v, rest, eps):
            out = rest
    return out


def _as_distribution(spec: GameSpec, delta) -> dict:
    if isinstance(delta, dict):
        mu0 = {s: Fraction(p) for s, p in delta.items() if Fraction(p) > 0}
    else:
        names = spec.members(delta) if isinstance(delta, int) else list(delta)
        mu0 = {s: Fraction(1, len(names)) for s in names}
    if not mu0:
        raise Refusal("initial distribution has empty support")
    return mu0


class ReachValue:
    """Value vectors of the bounded game: with uniformly random player 1 and
    ``horizon`` steps, the least reach probability from a distribution ``mu``
    over non-target states is ``min(a . mu for a in vectors)``."""

    def __init__(self, spec: GameSpec, horizon: int, vectors: list):
        self.spec = spec
        self.horizon = horizon
        self.vectors = vectors
        self.free = tuple(s for s in spec.states if s not in spec.targets)

    def __call__(self, delta) -> Fraction:
        mu0 = _as_distribution(self.spec, delta)
        T = self.spec.targets
        start = sum((p for s, p in mu0.items() if s in T), Fraction(0))
        mu = [mu0.get(s, Fraction(0)) for s in self.free]
        if not any(mu):
            return start
        return start + min(sum(a[n] * mu[n] for n in range(len(mu))) for a in self.vectors)


def reach_value_vectors(spec: GameSpec, horizon: int, max_horizon: int = 64,
                        max_vectors: int = 5000, eps: float = 1e-7) -> ReachValue:
    """Exact value iteration over player 2's information states.

    The value with ``h`` steps left is the minimum of finitely many linear
    functions of the unnormalized distribution over non-target states.  Those
    functions are kept as Fraction vectors; a float LP only ever discards a
    vector it finds strictly worse everywhere, which cannot change the minimum.
    """
    if horizon < 0 or horizon > max_horizon:
        raise GuardExceeded(f"horizon {horizon} outside [0, {max_horizon}]")
    T = spec.targets
    free = tuple(s for s in spec.states if s not in T)
    pos = {s: n for n, s in enumerate(free)}
    dim = len(free)
    w1 = Fraction(1, len(spec.actions1))
    # per action of player 2 and signal: reach[k] and move[k][l] with player 1 averaged out
    blocks = {}
    for (k, i, j), outs in spec.trans.items():
        if k in T:
            continue
        for p, _c, d, l in outs:
            p = Fraction(p)
            if p <= 0:
                continue
            reach, move = blocks.setdefault(j, {}).setdefault(
                d, ([Fraction(0)] * dim, [[Fraction(0)] * dim for _ in range(dim)]))
            if l in T:
                reach[pos[k]] += w1 * p
            else:
                move[pos[k]][pos[l]] += w1 * p
    gamma = [tuple([Fraction(0)] * dim)]
    for _h in range(horizon if dim else 0):
        candidates = []
        for j in spec.actions2:
            acc = [tuple([Fraction(0)] * dim)]
            for d in spec.signals2:
                if d not in blocks.get(j, {}):
                    continue
                reach, move = blocks[j][d]
                proj = _prune([tuple(reach[k] + sum(move[k][l] * a[l] for l in range(dim))
                                     for k in range(dim)) for a in gamma], eps)
                acc = _prune([tuple(x + y for x, y in zip(u, v)) for u in acc for v in proj], eps)
                if len(acc) > max_vectors:
                    raise GuardExceeded(f"more than {max_vectors} value vectors")
            candidates.extend(acc)
        new = _prune(candidates, eps)
        if len(new) > max_vectors:
            raise GuardExceeded(f"more than {max_vectors} value vectors")
        if set(new) == set(gamma):
            break
        gamma = new
    return ReachValue(spec, horizon, gamma)


def bounded_minmax_reach(spec: GameSpec, delta, horizon: int, **guards) -> Fraction:
    """Least probability, over pure observation-based strategies of player 2,
    that uniformly random player 1 visits a target within ``horizon`` steps."""
    mu0 = _as_distribution(spec, delta)
    return reach_value_vectors(spec, horizon, **guards)(mu0)


# -- perfect information ----------------------------------------------------------

def revealing_problems(spec: GameSpec) -> list:
    """Reasons the signals fail to reveal the next state and both actions."""
    seen = {}
    problems = []
    for (k, i, j), outs in spec.trans.items():
        for p, c, d, l in outs:
            if Fraction(p) <= 0:
                continue
            for player, sig in ((1, c), (2, d)):
                info = (i, j, l)
                prev = seen.setdefault((player, sig), info)
                if prev != info:
                    problems.append(f"signal {sig} of player {player} is emitted after "
                                    f"{prev} and {info}")
    return problems


def _supports(spec: GameSpec) -> dict:
    out = {}
    for (k, i, j), outs in spec.trans.items():
        out[(k, i, j)] = frozenset(l for p, _c, _d, l in outs if Fraction(p) > 0)
    return out


def perfect_info_solver(spec: GameSpec) -> dict:
    """Three-way class of every state of a game whose signals reveal
    everything, from attractor-style fixpoints on the concurrent game graph."""
    problems = revealing_problems(spec)
    if problems:
        raise Refusal("game is not perfect-information: " + problems[0])
    supp = _supports(spec)
    K = set(spec.states)
    T = set(spec.targets)
    I, J = spec.actions1, spec.actions2
    # player 2 surely safe: some action keeps every outcome inside, whatever player 1 does
    safe = K - T
    while True:
        keep = {s for s in safe if any(all(supp[(s, i, j)] <= safe for i in I) for j in J)}
        if keep == safe:
            break
        safe = keep
    # player 1 almost surely reaches: nu Y. mu X. T | Apre(Y, X)
    Y = set(K)
    while True:
        X = set(T)
        while True:
            grow = set(X)
            for s in Y - X:
                allowed = [i for i in I if all(supp[(s, i, j)] <= Y for j in J)]
                if allowed and all(any(supp[(s, i, j)] & X for i in allowed) for j in J):
                    grow.add(s)
            if grow == X:
                break
            X = grow
        if X == Y:
            break
        Y = X
    out = {}
    for s in spec.states:
        if s in T or s in Y:
            out[s] = ALMOST_SURE_P1
        elif s in safe:
            out[s] = SURE_P2
        else:
            out[s] = POSITIVE_BOTH
    return out
