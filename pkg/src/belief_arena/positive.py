"""Positive winning for player 1 versus sure winning for player 2.

Player 2 surely avoids the targets from exactly the supports in the greatest
fixpoint of ``phi_step``; from every other support the uniformly random
player-1 strategy reaches a target with positive probability.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GameInputError, Refusal
from .game import GameSpec, SupportFamily, bits, closure
from .strategy import FiniteMemoryStrategy, belief_strategy, uniform_random_strategy

POS_P1 = "POS_P1"
SURE_P2 = "SURE_P2"


@dataclass(frozen=True)
class PositivePartition:
    sure_p2: SupportFamily
    universe: SupportFamily
    action_choice: dict  # support mask -> action name of player 2

    def is_sure(self, mask: int) -> bool:
        return mask in self.sure_p2


def _p2_successors(spec: GameSpec, mask: int) -> list:
    """For each player-2 action, the nonempty beliefs reachable by one of its
    signals."""
    out = []
    for j in spec.actions2:
        succ = []
        for d in spec.signals_of(2, j):
            post = spec.post(2, d)
            b = 0
            for n in bits(mask):
                b |= post[n]
            if b:
                succ.append(b)
        out.append(succ)
    return out


def _certifier(succ_by_action, family) -> int | None:
    for pos, succ in enumerate(succ_by_action):
        if all(b in family for b in succ):
            return pos
    return None


def phi_step(spec: GameSpec, family: SupportFamily) -> SupportFamily:
    """Keep the supports from which some player-2 action sends every possible
    next belief back into ``family``.  Impossible signals impose nothing."""
    T = spec.target_mask
    for m in family.elements:
        if m & T:
            raise GameInputError(
                f"family member {spec.format_support(m)} intersects the targets")
    members = family.elements
    kept = [m for m in members
            if _certifier(_p2_successors(spec, m), members) is not None]
    return family.with_elements(kept)


def sure_safety_fixpoint(spec: GameSpec, universe: SupportFamily | list) -> PositivePartition:
    """Greatest fixpoint of ``phi_step`` below the target-free part of ``universe``."""
    if not isinstance(universe, SupportFamily):
        universe = SupportFamily(frozenset(universe), "K")
    T = spec.target_mask
    alive = {m for m in universe.elements if m and not m & T}
    succ = {m: _p2_successors(spec, m) for m in alive}
    # reverse index: which supports mention belief b as a successor
    users = {}
    for m, by_action in succ.items():
        for bs in by_action:
            for b in bs:
                users.setdefault(b, set()).add(m)
    queue = [m for m in alive if _certifier(succ[m], alive) is None]
    dead = set(queue)
    while queue:
        m = queue.pop()
        alive.discard(m)
        for u in users.get(m, ()):
            if u in alive and u not in dead and _certifier(succ[u], alive) is None:
                dead.add(u)
                queue.append(u)
    choice = {m: spec.actions2[_certifier(succ[m], alive)] for m in alive}
    return PositivePartition(SupportFamily(frozenset(alive), "K-T"), universe, choice)


def p2_closure(spec: GameSpec, starts) -> SupportFamily:
    """Player-2 belief closure; supports meeting the targets are kept but not
    expanded (they can never be surely safe)."""
    T = spec.target_mask
    elems = closure(spec, starts, [(2, False)], expand=lambda m: not m & T)
    return SupportFamily(frozenset(elems), "K")


def positive_partition(spec: GameSpec, supports, full_lattice: bool = False) -> PositivePartition:
    if full_lattice:
        universe = SupportFamily(frozenset(spec.lattice()), "K-T")
    else:
        universe = p2_closure(spec, [spec.mask(s) for s in supports])
    return sure_safety_fixpoint(spec, universe)


def classify_positive(spec: GameSpec, support, full_lattice: bool = False) -> str:
    """``SURE_P2`` if player 2 surely keeps the play out of the targets,
    ``POS_P1`` otherwise."""
    m = spec.mask(support)
    if not m:
        raise GameInputError("support must be nonempty")
    if m & spec.target_mask:
        return POS_P1
    part = positive_partition(spec, [m], full_lattice)
    return SURE_P2 if m in part.sure_p2 else POS_P1


def synthesize_sure_p2(spec: GameSpec, partition: PositivePartition,
                       initial=None) -> FiniteMemoryStrategy:
    """Belief strategy for player 2 that keeps its belief inside the fixpoint.

    Memory is the player-2 belief, initialized to the support itself, and the
    output at belief ``L`` is the certifying action recorded for ``L``.
    """
    roots = sorted(partition.sure_p2.elements)
    if initial is not None:
        m = spec.mask(initial)
        if m not in partition.sure_p2:
            raise Refusal(f"support {spec.format_support(m)} is not surely winning "
                          f"for player 2 (classified {POS_P1})")
        roots = [m]
    choice = partition.action_choice
    strat = belief_strategy(spec, 2, roots, lambda b: [choice[b]] if b in choice else None,
                            pessimistic=False, kind="sure")
    return strat


__all__ = ["POS_P1", "SURE_P2", "PositivePartition", "phi_step", "sure_safety_fixpoint",
           "classify_positive", "positive_partition", "p2_closure", "synthesize_sure_p2",
           "uniform_random_strategy"]
