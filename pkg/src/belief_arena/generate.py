"""Seeded random games for the oracle-equivalence corpus."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .game import GameSpec
from .strategy import ANY, FiniteMemoryStrategy


@dataclass(frozen=True)
class Profile:
    """Upper bounds on the sizes of a generated game.  ``states`` counts the
    non-target states; every size is drawn uniformly between its lower bound
    and the bound given here."""

    states: int = 4
    targets: int = 1
    actions1: int = 2
    actions2: int = 2
    signals1: int = 2
    signals2: int = 2
    max_outcomes: int = 3
    exact_sizes: bool = False

    @classmethod
    def parse(cls, text: str) -> "Profile":
        """``"K=3,T=1,I=2,J=2,C=2,D=2"`` (any subset of the keys, plus ``exact``)."""
        keys = {"K": "states", "T": "targets", "I": "actions1", "J": "actions2",
                "C": "signals1", "D": "signals2", "O": "max_outcomes"}
        kw = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            if part == "exact":
                kw["exact_sizes"] = True
                continue
            k, _, v = part.partition("=")
            if k.strip() not in keys:
                raise ValueError(f"unknown profile key {k!r}")
            kw[keys[k.strip()]] = int(v)
        return cls(**kw)


def _assign_signals(rng, prefix, n_signals, actions):
    """Signal names and an onto signal -> action map."""
    sigs = [f"{prefix}{n}" for n in range(n_signals)]
    owners = list(actions) + [rng.choice(actions) for _ in range(n_signals - len(actions))]
    rng.shuffle(owners)
    return sigs, dict(zip(sigs, owners))


def generate_random_game(profile: Profile, seed: int, name: str | None = None) -> GameSpec:
    """Random act-consistent game; identical inputs give identical games."""
    rng = random.Random(seed)

    def size(hi, lo=1):
        return hi if profile.exact_sizes else rng.randint(lo, hi)

    n_nt = size(profile.states)
    n_t = size(profile.targets, 0) if profile.targets else 0
    n_i = size(profile.actions1)
    n_j = size(profile.actions2)
    n_c = max(n_i, size(profile.signals1))
    n_d = max(n_j, size(profile.signals2))
    states = tuple(f"s{n}" for n in range(n_nt)) + tuple(f"t{n}" for n in range(n_t))
    targets = frozenset(states[n_nt:])
    a1 = tuple(f"i{n}" for n in range(n_i))
    a2 = tuple(f"j{n}" for n in range(n_j))
    s1, act1 = _assign_signals(rng, "c", n_c, a1)
    s2, act2 = _assign_signals(rng, "d", n_d, a2)
    by1 = {i: [c for c in s1 if act1[c] == i] for i in a1}
    by2 = {j: [d for d in s2 if act2[d] == j] for j in a2}
    absorbing_targets = rng.random() < 0.5
    trans = {}
    for k in states:
        for i in a1:
            for j in a2:
                if k in targets and absorbing_targets:
                    trans[(k, i, j)] = ((Fraction(1), by1[i][0], by2[j][0], k),)
                    continue
                outs = {}
                for _ in range(rng.randint(1, profile.max_outcomes)):
                    key = (rng.choice(by1[i]), rng.choice(by2[j]), rng.choice(states))
                    outs[key] = outs.get(key, 0) + rng.randint(1, 3)
                total = sum(outs.values())
                trans[(k, i, j)] = tuple((Fraction(w, total), c, d, l)
                                         for (c, d, l), w in outs.items())
    nontarget = list(states[:n_nt])
    init_states = rng.sample(nontarget, rng.randint(1, len(nontarget)))
    init = {s: Fraction(1, len(init_states)) for s in sorted(init_states)}
    act = dict(act1)
    act.update(act2)
    return GameSpec(states=states, targets=targets, actions1=a1, actions2=a2,
                    signals1=tuple(s1), signals2=tuple(s2), act=act, trans=trans,
                    init=init, name=name or f"random_{seed}")


def generate_revealing_game(n_states: int, seed: int, n_targets: int = 1,
                            n_actions: int = 2, max_outcomes: int = 3) -> GameSpec:
    """Random game whose signals reveal the next state and both actions to
    both players."""
    rng = random.Random(seed)
    states = tuple(f"s{n}" for n in range(n_states)) + tuple(f"t{n}" for n in range(n_targets))
    targets = frozenset(states[n_states:])
    a1 = tuple(f"i{n}" for n in range(rng.randint(1, n_actions)))
    a2 = tuple(f"j{n}" for n in range(rng.randint(1, n_actions)))
    s1, s2, act = [], [], {}
    for i in a1:
        for j in a2:
            for l in states:
                c, d = f"c_{i}_{j}_{l}", f"d_{i}_{j}_{l}"
                s1.append(c)
                s2.append(d)
                act[c], act[d] = i, j
    trans = {}
    for k in states:
        for i in a1:
            for j in a2:
                outs = {}
                for _ in range(rng.randint(1, max_outcomes)):
                    l = rng.choice(states)
                    outs[l] = outs.get(l, 0) + rng.randint(1, 3)
                total = sum(outs.values())
                trans[(k, i, j)] = tuple((Fraction(w, total), f"c_{i}_{j}_{l}",
                                          f"d_{i}_{j}_{l}", l) for l, w in outs.items())
    return GameSpec(states=states, targets=targets, actions1=a1, actions2=a2,
                    signals1=tuple(s1), signals2=tuple(s2), act=act, trans=trans,
                    init={states[0]: Fraction(1)}, name=f"revealing_{seed}")


def reveal_signals(spec: GameSpec) -> GameSpec:
    """Recast ``spec`` with signals revealing the next state and both actions."""
    s1, s2, act = [], [], {}
    trans = {}
    for (k, i, j), outs in spec.trans.items():
        merged = {}
        for p, _c, _d, l in outs:
            merged[l] = merged.get(l, 0) + p
        rows = []
        for l, p in merged.items():
            c, d = f"c_{i}_{j}_{l}", f"d_{i}_{j}_{l}"
            if c not in act:
                s1.append(c)
                s2.append(d)
                act[c], act[d] = i, j
            rows.append((p, c, d, l))
        trans[(k, i, j)] = tuple(rows)
    # every action must stay encoded by some signal
    for i in spec.actions1:
        if not any(act[c] == i for c in s1):
            c = f"c_{i}"
            s1.append(c)
            act[c] = i
    for j in spec.actions2:
        if not any(act[d] == j for d in s2):
            d = f"d_{j}"
            s2.append(d)
            act[d] = j
    return GameSpec(states=spec.states, targets=spec.targets, actions1=spec.actions1,
                    actions2=spec.actions2, signals1=tuple(s1), signals2=tuple(s2),
                    act=act, trans=trans, init=dict(spec.init), name=spec.name + "_revealed")


def random_strategy(spec: GameSpec, player: int, seed: int, memory: int = 3) -> FiniteMemoryStrategy:
    """Seeded random finite-memory strategy, used as a simulation adversary.

    Outputs mix pure and randomized rows; updates are deterministic except
    for an occasional two-way coin.  Every support starts in memory 0.
    """
    rng = random.Random(seed)
    acts = spec.actions(player)
    sigs = spec.signals(player)
    n = rng.randint(1, memory)
    output = []
    for _m in range(n):
        chosen = rng.sample(acts, rng.randint(1, len(acts)))
        w = [rng.randint(1, 4) for _ in chosen]
        output.append(tuple((a, x / sum(w)) for a, x in zip(chosen, w)))
    update = []
    for _m in range(n):
        row = {}
        for s in sigs:
            a = rng.randrange(n)
            if n > 1 and rng.random() < 0.25:
                b = (a + 1 + rng.randrange(n - 1)) % n
                row[s] = ((a, 0.5), (b, 0.5))
            else:
                row[s] = ((a, 1.0),)
        update.append(row)
    return FiniteMemoryStrategy(
        player=player, actions=acts, signals=sigs, memory=tuple(f"m{k}" for k in range(n)),
        init={}, update=tuple(update), output=tuple(output), kind="random-fm",
        init_kind=ANY, meta={"seed": seed})
