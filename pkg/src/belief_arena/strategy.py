"""Executable finite-memory strategies with (possibly) stochastic memory updates.

Every strategy, from the uniform random one to the hierarchical switching
strategy of player 2, is a :class:`FiniteMemoryStrategy`: a finite set of
labelled memory states, an initialization map from supports, an update that
maps ``(memory, signal)`` to a distribution over memory states, and an output
distribution over actions per memory state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import GameInputError, Refusal
from .game import PROB_TOL, GameSpec, bits, closure

# init kinds
TABLE = "table"
ANY = "any"
BELIEF = "belief"
PESSIMISTIC = "pessimistic-belief"


def support_label(names) -> str:
    return "{" + ",".join(sorted(names)) + "}"


@dataclass(frozen=True, eq=False)
class FiniteMemoryStrategy:
    """Tables are indexed by memory position; ``memory`` holds the labels.

    ``update[m][signal]`` and ``output[m]`` are tuples of ``(target, prob)``
    where targets are memory positions and action names respectively.
    ``init`` maps a support (as a sorted tuple of state names) to a memory
    position.  Belief strategies (``init_kind`` other than ``"table"``)
    compute the initial memory from the support itself: its label, after
    dropping ``excluded`` states for pessimistic beliefs.
    """

    player: int
    actions: tuple
    signals: tuple
    memory: tuple
    init: Mapping[tuple, int]
    update: tuple
    output: tuple
    kind: str = "custom"
    init_kind: str = TABLE
    excluded: frozenset = frozenset()
    meta: dict = field(default_factory=dict)

    @cached_property
    def index(self) -> dict:
        return {label: n for n, label in enumerate(self.memory)}

    def check(self) -> list:
        """Structural problems (empty list when the tables are well formed)."""
        problems = []
        n = len(self.memory)
        if len(self.update) != n or len(self.output) != n:
            problems.append("update/output tables do not match the memory size")
            return problems
        acts = set(self.actions)
        for m in range(n):
            dist = self.output[m]
            if abs(sum(p for _, p in dist) - 1.0) > PROB_TOL:
                problems.append(f"output of {self.memory[m]} does not sum to 1")
            if any(a not in acts for a, _ in dist):
                problems.append(f"output of {self.memory[m]} uses an unknown action")
            if any(p < 0 for _, p in dist):
                problems.append(f"output of {self.memory[m]} has a negative weight")
            for sig in self.signals:
                row = self.update[m].get(sig)
                if row is None:
                    problems.append(f"no update for ({self.memory[m]}, {sig})")
                    continue
                if abs(sum(p for _, p in row) - 1.0) > PROB_TOL:
                    problems.append(f"update ({self.memory[m]}, {sig}) does not sum to 1")
                if any(not 0 <= t < n for t, _ in row):
                    problems.append(f"update ({self.memory[m]}, {sig}) leaves the memory")
        for sup, m in self.init.items():
            if not 0 <= m < n:
                problems.append(f"init of {sup} leaves the memory")
        return problems

    @cached_property
    def compiled(self) -> "CompiledStrategy":
        return CompiledStrategy(self)


def _sample(row, u: float):
    acc = 0.0
    for target, p in row:
        acc += p
        if u < acc:
            return target
    return row[-1][0]


def init_strategy(strategy: FiniteMemoryStrategy, support) -> str:
    """Initial memory label for an initial distribution with this support
    (an iterable of state names)."""
    names = tuple(sorted(support))
    if strategy.init_kind == ANY:
        return strategy.memory[0]
    m = strategy.init.get(names)
    if m is None and strategy.excluded:
        m = strategy.init.get(tuple(s for s in names if s not in strategy.excluded))
    if m is None and strategy.init_kind != TABLE:
        kept = [s for s in names if s not in strategy.excluded] \
            if strategy.init_kind == PESSIMISTIC else list(names)
        m = strategy.index.get(support_label(kept))
    if m is None:
        raise Refusal(f"strategy has no initial memory for support {support_label(names)}")
    return strategy.memory[m]


def step_strategy(strategy: FiniteMemoryStrategy, memory: str, signal: str,
                  u: float = 0.0) -> str:
    """Successor memory after ``signal``; ``u`` in [0, 1) drives stochastic updates."""
    if signal not in strategy.signals:
        raise GameInputError(f"unknown signal {signal!r} for player {strategy.player}")
    row = strategy.update[strategy.index[memory]][signal]
    return strategy.memory[_sample(row, u)]


def action_distribution(strategy: FiniteMemoryStrategy, memory: str) -> dict:
    return dict(strategy.output[strategy.index[memory]])


def sample_action(strategy: FiniteMemoryStrategy, memory: str, u: float) -> str:
    return _sample(strategy.output[strategy.index[memory]], u)


class CompiledStrategy:
    """Dense numpy tables for vectorised simulation.

    ``out_cum[m, w]`` / ``out_act[m, w]``: cumulative output weights and the
    action index they select.  ``upd_cum[m, s, w]`` / ``upd_next[m, s, w]``:
    the same for memory updates.  Padding entries carry ``inf`` so that any
    ``u < 1`` selects a real entry.
    """

    def __init__(self, strategy: FiniteMemoryStrategy):
        a_ix = {a: n for n, a in enumerate(strategy.actions)}
        n = len(strategy.memory)
        wo = max(len(d) for d in strategy.output)
        self.out_cum = np.full((n, wo), np.inf)
        self.out_act = np.zeros((n, wo), dtype=np.int64)
        for m, dist in enumerate(strategy.output):
            self._fill(self.out_cum[m], self.out_act[m], [(a_ix[a], p) for a, p in dist])
        ns = len(strategy.signals)
        wu = max(len(row) for upd in strategy.update for row in upd.values())
        self.upd_cum = np.full((n, ns, wu), np.inf)
        self.upd_next = np.zeros((n, ns, wu), dtype=np.int64)
        self.deterministic = wu == 1
        for m, upd in enumerate(strategy.update):
            for s, sig in enumerate(strategy.signals):
                self._fill(self.upd_cum[m, s], self.upd_next[m, s], list(upd[sig]))
        if self.deterministic:
            self.upd_det = self.upd_next[:, :, 0].copy()

    @staticmethod
    def _fill(cum, idx, row):
        row = [(t, p) for t, p in row if p > 0]
        acc = 0.0
        for w, (t, p) in enumerate(row):
            acc += p
            cum[w] = acc
            idx[w] = t
        cum[len(row) - 1] = np.inf

    def actions(self, memory: np.ndarray, u: np.ndarray) -> np.ndarray:
        cum = self.out_cum[memory]
        w = (u[:, None] < cum).argmax(axis=1)
        return self.out_act[memory, w]

    def step(self, memory: np.ndarray, signal: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.deterministic:
            return self.upd_det[memory, signal]
        cum = self.upd_cum[memory, signal]
        w = (u[:, None] < cum).argmax(axis=1)
        return self.upd_next[memory, signal, w]


# -- constructors -----------------------------------------------------------

def _uniform(items: Sequence) -> tuple:
    return tuple((a, 1.0 / len(items)) for a in items)


def uniform_random_strategy(spec: GameSpec, player: int) -> FiniteMemoryStrategy:
    """One memory state; plays every action of ``player`` with equal probability."""
    if player not in (1, 2):
        raise GameInputError(f"player must be 1 or 2, got {player!r}")
    sigs = spec.signals(player)
    return FiniteMemoryStrategy(
        player=player, actions=spec.actions(player), signals=sigs,
        memory=("*",), init={}, update=({s: ((0, 1.0),) for s in sigs},),
        output=(_uniform(spec.actions(player)),), kind="random", init_kind=ANY)


def belief_strategy(spec: GameSpec, player: int, roots, choose, pessimistic: bool,
                    kind: str, default=None) -> FiniteMemoryStrategy:
    """Belief (or pessimistic-belief) strategy over the beliefs reachable from
    ``roots``.

    ``choose(mask)`` returns the nonempty action set played uniformly at that
    belief, or ``None`` to fall back to ``default`` (all actions when unset).
    Pessimistic memories drop target states; the empty pessimistic belief
    (target surely visited) plays the first action.
    """
    nt = spec.nontarget_mask
    roots = [r & nt if pessimistic else r for r in roots]
    found = closure(spec, [r for r in roots if r], [(player, pessimistic)],
                    normalize=pessimistic)
    masks = list(found)
    pos = {m: n for n, m in enumerate(masks)}
    sigs = spec.signals(player)
    acts = spec.actions(player)
    succ = []
    for m in masks:
        row = {}
        for sig in sigs:
            post = spec.post(player, sig)
            out = 0
            for n in bits(m & nt if pessimistic else m):
                out |= post[n]
            row[sig] = out & nt if pessimistic else out
        succ.append(row)
    # the empty belief: impossible signal, or (pessimistically) target surely visited
    if any(not r for r in roots) or any(not b for row in succ for b in row.values()):
        pos[0] = len(masks)
        masks.append(0)
        succ.append({sig: 0 for sig in sigs})
    labels = tuple(spec.format_support(m) for m in masks)
    update = tuple({sig: ((pos[b], 1.0),) for sig, b in row.items()} for row in succ)
    output = []
    for m in masks:
        if not m:
            output.append(((acts[0], 1.0),))
            continue
        chosen = choose(m)
        if not chosen:
            chosen = default if default else acts
        output.append(_uniform([a for a in acts if a in set(chosen)]))
    init = {spec.members(r): pos[r] for r in roots}
    return FiniteMemoryStrategy(
        player=player, actions=acts, signals=sigs, memory=labels, init=init,
        update=update, output=tuple(output), kind=kind,
        init_kind=PESSIMISTIC if pessimistic else BELIEF,
        excluded=spec.targets if pessimistic else frozenset())
