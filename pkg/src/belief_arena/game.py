"""Game model: games with signals on both sides, supports, and belief operators.

A support is an ``int`` bit-vector over the declared state order (bit ``n`` set
means ``states[n]`` is a member).  Public operations also accept an iterable of
state names wherever a support is expected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import GameInputError

PROB_TOL = 1e-9

SupportLike = Union[int, Iterable[str]]
Outcome = tuple  # (prob: Fraction, c: str, d: str, l: str)


def as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    if isinstance(p, float):
        return Fraction(repr(p)).limit_denominator(10**12)
    return Fraction(str(p))


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A finite two-player stochastic game with signals.

    ``trans[(k, i, j)]`` lists the outcomes ``(p, c, d, l)`` of playing ``i``
    and ``j`` in state ``k``: with probability ``p`` player 1 sees ``c``,
    player 2 sees ``d`` and the game moves to ``l``.  Signals encode the
    action of their receiver through ``act``.
    """

    states: tuple
    targets: frozenset
    actions1: tuple
    actions2: tuple
    signals1: tuple
    signals2: tuple
    act: Mapping[str, str]
    trans: Mapping[tuple, tuple]
    init: Mapping[str, Fraction] = field(default_factory=dict)
    name: str = "game"

    # -- indexing -------------------------------------------------------
    @cached_property
    def state_index(self) -> dict:
        return {s: n for n, s in enumerate(self.states)}

    @cached_property
    def action_index(self) -> tuple:
        return ({a: n for n, a in enumerate(self.actions1)},
                {a: n for n, a in enumerate(self.actions2)})

    @cached_property
    def signal_index(self) -> tuple:
        return ({c: n for n, c in enumerate(self.signals1)},
                {d: n for n, d in enumerate(self.signals2)})

    @cached_property
    def all_states(self) -> int:
        return (1 << len(self.states)) - 1

    @cached_property
    def target_mask(self) -> int:
        return self.mask(self.targets)

    @cached_property
    def nontarget_mask(self) -> int:
        return self.all_states & ~self.target_mask

    def actions(self, player: int) -> tuple:
        return self.actions1 if player == 1 else self.actions2

    def signals(self, player: int) -> tuple:
        return self.signals1 if player == 1 else self.signals2

    def signals_of(self, player: int, action: str) -> tuple:
        """Signals of ``player`` that encode ``action``, in declaration order."""
        return tuple(s for s in self.signals(player) if self.act.get(s) == action)

    # -- supports -------------------------------------------------------
    def mask(self, support: SupportLike) -> int:
        if isinstance(support, int):
            if support < 0 or support & ~self.all_states:
                raise GameInputError(f"support bit-vector {support:#x} outside the state set")
            return support
        if isinstance(support, str):
            support = [support]
        m = 0
        for s in support:
            try:
                m |= 1 << self.state_index[s]
            except KeyError:
                raise GameInputError(f"unknown state {s!r}") from None
        return m

    def members(self, mask: int) -> tuple:
        """State names of ``mask`` sorted by name."""
        return tuple(sorted(self.states[n] for n in bits(mask)))

    def format_support(self, mask: int) -> str:
        return "{" + ",".join(self.members(mask)) + "}"

    def lattice(self, within: int | None = None) -> list:
        """All nonempty subsets of ``within`` (default: the non-target states)."""
        if within is None:
            within = self.nontarget_mask
        idx = list(bits(within))
        out = []
        for sub in range(1, 1 << len(idx)):
            m = 0
            for pos, n in enumerate(idx):
                if sub >> pos & 1:
                    m |= 1 << n
            out.append(m)
        return out

    # -- operator tables ------------------------------------------------
    @cached_property
    def _posts(self) -> tuple:
        """``post[player][signal][l]`` = states reachable from ``l`` when the
        player receives ``signal`` (any opponent signal, consistent actions)."""
        si = self.state_index
        post1 = [[0] * len(self.states) for _ in self.signals1]
        post2 = [[0] * len(self.states) for _ in self.signals2]
        c_ix, d_ix = self.signal_index
        for (k, i, j), outs in self.trans.items():
            ki = si[k]
            for p, c, d, l in outs:
                if p <= 0:
                    continue
                # only entries consistent with the signal's encoded action count
                if self.act.get(c) == i:
                    post1[c_ix[c]][ki] |= 1 << si[l]
                if self.act.get(d) == j:
                    post2[d_ix[d]][ki] |= 1 << si[l]
        return post1, post2

    def post(self, player: int, signal: str) -> list:
        c_ix = self.signal_index[player - 1]
        try:
            return self._posts[player - 1][c_ix[signal]]
        except KeyError:
            raise GameInputError(
                f"unknown signal {signal!r} for player {player}") from None

    @cached_property
    def outcomes(self) -> list:
        """``outcomes[k][i][j]`` = list of (p, c, d, l) index tuples, p > 0."""
        si = self.state_index
        a1, a2 = self.action_index
        c_ix, d_ix = self.signal_index
        table = [[[[] for _ in self.actions2] for _ in self.actions1] for _ in self.states]
        for (k, i, j), outs in self.trans.items():
            cell = table[si[k]][a1[i]][a2[j]]
            for p, c, d, l in outs:
                if p > 0:
                    cell.append((p, c_ix[c], d_ix[d], si[l]))
        return table

    def initial_support(self) -> int:
        if not self.init:
            raise GameInputError(f"game {self.name!r} declares no initial distribution")
        return self.mask(s for s, p in self.init.items() if p > 0)


@dataclass
class ValidationReport:
    ok: bool
    issues: list  # (severity, location, message)

    def errors(self) -> list:
        return [i for i in self.issues if i[0] == "error"]

    def render(self) -> str:
        if not self.issues:
            return "ok"
        return "\n".join(f"{sev}: {loc}: {msg}" for sev, loc, msg in self.issues)


def validate_game(spec: GameSpec) -> ValidationReport:
    """Check every model invariant and report all violations (never raises)."""
    issues = []

    def err(loc, msg):
        issues.append(("error", loc, msg))

    for label, names in (("states", spec.states), ("actions1", spec.actions1),
                         ("actions2", spec.actions2), ("signals1", spec.signals1),
                         ("signals2", spec.signals2)):
        if not names:
            err(label, "must be nonempty")
        if len(set(names)) != len(names):
            err(label, "duplicate names")
    states = set(spec.states)
    for t in spec.targets:
        if t not in states:
            err("target", f"unknown state {t!r}")
    both = set(spec.signals1) & set(spec.signals2)
    if both:
        err("signals", f"names shared by both players: {sorted(both)}")

    a1, a2 = set(spec.actions1), set(spec.actions2)
    for player, sigs, acts in ((1, spec.signals1, a1), (2, spec.signals2, a2)):
        for s in sigs:
            a = spec.act.get(s)
            if a is None:
                err(f"act{player}", f"signal {s!r} encodes no action")
            elif a not in acts:
                err(f"act{player}", f"signal {s!r} encodes {a!r}, not an action of player {player}")
        encoded = {spec.act.get(s) for s in sigs}
        for a in (spec.actions1 if player == 1 else spec.actions2):
            if a not in encoded:
                err(f"act{player}", f"action {a!r} is encoded by no signal")

    c1, d2 = set(spec.signals1), set(spec.signals2)
    for k in spec.states:
        for i in spec.actions1:
            for j in spec.actions2:
                loc = f"trans({k},{i},{j})"
                outs = spec.trans.get((k, i, j))
                if outs is None:
                    err(loc, f"incomplete kernel at ({k},{i},{j})")
                    continue
                total = Fraction(0)
                for p, c, d, l in outs:
                    if p < 0:
                        err(loc, f"negative probability {p}")
                    total += p
                    if c not in c1:
                        err(loc, f"unknown player-1 signal {c!r}")
                    if d not in d2:
                        err(loc, f"unknown player-2 signal {d!r}")
                    if l not in states:
                        err(loc, f"unknown successor state {l!r}")
                    if p > 0 and (spec.act.get(c) != i or spec.act.get(d) != j):
                        err(loc, f"signal/action mismatch: ({c},{d}) emitted after ({i},{j})")
                if abs(float(total) - 1.0) > PROB_TOL:
                    err(loc, f"distribution sums to {float(total):.12g}")
    for key in spec.trans:
        k, i, j = key
        if k not in states or i not in a1 or j not in a2:
            err(f"trans({k},{i},{j})", "transition for undeclared state or action")
    if spec.init:
        total = sum(spec.init.values(), Fraction(0))
        for s, p in spec.init.items():
            if s not in states:
                err("init", f"unknown state {s!r}")
            if p < 0:
                err("init", f"negative probability for {s!r}")
        if abs(float(total) - 1.0) > PROB_TOL:
            err("init", f"distribution sums to {float(total):.12g}")
    return ValidationReport(ok=not any(i[0] == "error" for i in issues), issues=issues)


# -- supports and families ------------------------------------------------

@dataclass(frozen=True)
class SupportFamily:
    """A set of supports tagged with the universe it lives in
    (``"K"``, ``"K-T"`` or ``"product"``)."""

    elements: frozenset = frozenset()
    universe: str = "K-T"

    def __contains__(self, mask) -> bool:
        return mask in self.elements

    def __iter__(self):
        return iter(sorted(self.elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __le__(self, other: "SupportFamily") -> bool:
        return self.elements <= other.elements

    def with_elements(self, elements) -> "SupportFamily":
        return SupportFamily(frozenset(elements), self.universe)

    def intersection(self, other: "SupportFamily") -> "SupportFamily":
        return self.with_elements(self.elements & other.elements)

    def union(self, other: "SupportFamily") -> "SupportFamily":
        return self.with_elements(self.elements | other.elements)

    def is_upward_closed(self, within: Iterable[int]) -> bool:
        """Every element of ``within`` that is a superset of a member is a member."""
        members = self.elements
        for cand in within:
            if cand in members:
                continue
            if any(m & cand == m for m in members):
                return False
        return True

    def contains_subset_of(self, mask: int) -> bool:
        return any(m & mask == mask for m in self.elements)

    def names(self, spec: GameSpec) -> list:
        return sorted(list(spec.members(m)) for m in self.elements)


# -- belief operators ----------------------------------------------------

def _check_player(player):
    if player not in (1, 2):
        raise GameInputError(f"player must be 1 or 2, got {player!r}")


def belief_update(spec: GameSpec, player: int, support: SupportLike, signal: str) -> int:
    """States the game may be in after ``player`` receives ``signal`` from a
    state of ``support``.  Empty when the signal is impossible."""
    _check_player(player)
    post = spec.post(player, signal)
    out = 0
    for n in bits(spec.mask(support)):
        out |= post[n]
    return out


def pessimistic_belief_update(spec: GameSpec, player: int, support: SupportLike,
                              signal: str) -> int:
    """Belief update under the assumption that no target was visited yet.

    Equal to ``belief_update(spec, player, support - T, signal)``; an empty
    result means the target was surely visited or the signal is impossible.
    """
    return belief_update(spec, player, spec.mask(support) & spec.nontarget_mask, signal)


def belief_fold(spec: GameSpec, player: int, support: SupportLike,
                signals: Sequence[str], pessimistic: bool = False) -> int:
    step = pessimistic_belief_update if pessimistic else belief_update
    m = spec.mask(support)
    for s in signals:
        m = step(spec, player, m, s)
    return m


def closure(spec: GameSpec, starts: Iterable[int], ops: Sequence[tuple],
            normalize: bool = False, expand=None) -> list:
    """Breadth-first closure of ``starts`` under belief updates.

    ``ops`` is a sequence of ``(player, pessimistic)`` pairs; every signal of
    that player is applied.  Empty supports are dropped.  With ``normalize``
    target states are removed from every produced support.  ``expand`` may
    veto expanding a member (it is still kept).  Order is deterministic:
    discovery order, signals in declaration order.
    """
    seen = {}
    queue = []
    for s in starts:
        if normalize:
            s &= spec.nontarget_mask
        if s and s not in seen:
            seen[s] = None
            queue.append(s)
    head = 0
    tables = []
    for player, pess in ops:
        for sig in spec.signals(player):
            tables.append((spec.post(player, sig), pess))
    nt = spec.nontarget_mask
    while head < len(queue):
        cur = queue[head]
        head += 1
        if expand is not None and not expand(cur):
            continue
        for post, pess in tables:
            src = cur & nt if pess else cur
            out = 0
            for n in bits(src):
                out |= post[n]
            if normalize:
                out &= nt
            if out and out not in seen:
                seen[out] = None
                queue.append(out)
    return queue


def reachable_beliefs(spec: GameSpec, player: int, start: SupportLike,
                      pessimistic: bool) -> SupportFamily:
    """Smallest family holding ``start`` and closed under the player's belief
    operator over all signals (empty beliefs excluded).

    In pessimistic mode beliefs are stored with target states removed, since
    the next pessimistic update discards them anyway.
    """
    _check_player(player)
    start = spec.mask(start)
    if not start:
        raise GameInputError("start support must be nonempty")
    elems = closure(spec, [start], [(player, pessimistic)], normalize=pessimistic)
    return SupportFamily(frozenset(elems), "K-T" if pessimistic else "K")
