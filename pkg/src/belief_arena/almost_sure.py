"""Almost-sure winning for player 1 versus positive winning for player 2.

The solver works on families of supports over the non-target states.  For a
family ``F`` (supports player 1's pessimistic belief must avoid), the
``F``-game is solved on the product of the game with player 1's pessimistic
beliefs; iterating ``F_{n+1} = {supports positively winning for player 2 in
the F_n-game}`` from the empty family converges to the supports positively
winning for player 2 in the original game.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import GameInputError, Refusal
from .game import GameSpec, SupportFamily, bits, closure
from .positive import (POS_P1, SURE_P2, PositivePartition, p2_closure,
                       sure_safety_fixpoint, synthesize_sure_p2)
from .strategy import TABLE, FiniteMemoryStrategy, belief_strategy

MIX_ACTION = "mix"
MIX_SIGNAL = "mix_c"


class ThreeWayClass(str, enum.Enum):
    ALMOST_SURE_P1 = "almost_sure_p1"
    SURE_P2 = "sure_p2"
    POSITIVE_BOTH = "positive_both"


# -- product game -----------------------------------------------------------

def _pair_name(spec: GameSpec, k: int, b: int) -> str:
    return spec.states[k] + "|" + "+".join(spec.members(b))


def pessimistic_successor(spec: GameSpec, belief: int, signal: str) -> int:
    """Player 1's next pessimistic belief, targets dropped."""
    post = spec.post(1, signal)
    out = 0
    for n in bits(belief & spec.nontarget_mask):
        out |= post[n]
    return out & spec.nontarget_mask


@dataclass(frozen=True, eq=False)
class ProductGame:
    """Synchronized product of a game with player 1's pessimistic beliefs.

    State ``n`` of ``game`` is the pair ``pairs[n] = (k, B)``.  Pairs whose
    state is a target, or whose belief lies in ``family``, are absorbing.
    """

    base: GameSpec
    family: SupportFamily
    game: GameSpec
    pairs: tuple
    index: dict
    bad: int
    target: int

    def diag(self, belief: int) -> int:
        """Product support ``{(k, belief) : k in belief}``."""
        m = 0
        for k in bits(belief):
            m |= 1 << self.index[(k, belief)]
        return m

    def project(self, mask: int) -> int:
        out = 0
        for n in bits(mask):
            out |= 1 << self.pairs[n][0]
        return out


def _absorbing_row(spec: GameSpec, name: str, i: str, j: str) -> tuple:
    return ((Fraction(1), spec.signals_of(1, i)[0], spec.signals_of(2, j)[0], name),)


def build_product_game(spec: GameSpec, family: SupportFamily, roots=None) -> ProductGame:
    """Product restricted to the pairs reachable from the diagonals of ``roots``
    (pessimistic beliefs; defaults to the declared initial support)."""
    T = spec.target_mask
    for m in family.elements:
        if m & T:
            raise GameInputError(
                f"family member {spec.format_support(m)} intersects the targets")
    if roots is None:
        roots = [spec.initial_support()]
    nt = spec.nontarget_mask
    roots = [r & nt for r in roots if r & nt]
    fam = family.elements
    succ_cache = {}

    def succ(b, c):
        key = (b, c)
        if key not in succ_cache:
            succ_cache[key] = pessimistic_successor(spec, b, spec.signals1[c])
        return succ_cache[key]

    seen = {}
    queue = []
    for r in roots:
        for k in bits(r):
            if (k, r) not in seen:
                seen[(k, r)] = None
                queue.append((k, r))
    head = 0
    out = spec.outcomes
    while head < len(queue):
        k, b = queue[head]
        head += 1
        if T >> k & 1 or b in fam:
            continue
        for row in out[k]:
            for cell in row:
                for p, c, d, l in cell:
                    pair = (l, succ(b, c))
                    if pair not in seen:
                        seen[pair] = None
                        queue.append(pair)

    pairs = sorted(seen, key=lambda kb: (kb[0], tuple(bits(kb[1]))))
    index = {kb: n for n, kb in enumerate(pairs)}
    names = tuple(_pair_name(spec, k, b) for k, b in pairs)
    trans = {}
    bad = target = 0
    for n, (k, b) in enumerate(pairs):
        name = names[n]
        absorbing = False
        if T >> k & 1:
            target |= 1 << n
            absorbing = True
        elif b in fam:
            bad |= 1 << n
            absorbing = True
        for ii, i in enumerate(spec.actions1):
            for jj, j in enumerate(spec.actions2):
                if absorbing:
                    trans[(name, i, j)] = _absorbing_row(spec, name, i, j)
                    continue
                trans[(name, i, j)] = tuple(
                    (p, spec.signals1[c], spec.signals2[d], names[index[(l, succ(b, c))]])
                    for p, c, d, l in out[k][ii][jj])
    game = GameSpec(states=names, targets=frozenset(names[n] for n in bits(target)),
                    actions1=spec.actions1, actions2=spec.actions2,
                    signals1=spec.signals1, signals2=spec.signals2, act=spec.act,
                    trans=trans, name=spec.name + "-product")
    return ProductGame(spec, family, game, tuple(pairs), index, bad, target)


def restrict_player1(product: ProductGame, allowed: dict) -> GameSpec:
    """One-player-1-action game in which player 1 plays uniformly over
    ``allowed[B]`` at every pair ``(k, B)``; pairs whose belief has no allowed
    set become absorbing.  Player 1's signals are merged into one."""
    spec = product.base
    g = product.game
    names = g.states
    trans = {}
    for n, (k, b) in enumerate(product.pairs):
        name = names[n]
        acts = allowed.get(b)
        stuck = product.target >> n & 1 or product.bad >> n & 1 or not acts
        for jj, j in enumerate(spec.actions2):
            if stuck:
                trans[(name, MIX_ACTION, j)] = (
                    (Fraction(1), MIX_SIGNAL, spec.signals_of(2, j)[0], name),)
                continue
            w = Fraction(1, len(acts))
            dist = {}
            for i in acts:
                for p, c, d, l in g.trans[(name, i, j)]:
                    key = (d, l)
                    dist[key] = dist.get(key, 0) + w * p
            trans[(name, MIX_ACTION, j)] = tuple(
                (p, MIX_SIGNAL, d, l) for (d, l), p in dist.items())
    act = {MIX_SIGNAL: MIX_ACTION}
    act.update({d: spec.act[d] for d in spec.signals2})
    return GameSpec(states=names, targets=g.targets, actions1=(MIX_ACTION,),
                    actions2=spec.actions2, signals1=(MIX_SIGNAL,),
                    signals2=spec.signals2, act=act, trans=trans,
                    name=spec.name + "-restricted")


# -- one F-game ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StageCertificate:
    """Player 2's sure-safety fixpoint in one round of the inner fixpoint.

    ``game`` is the product restricted to the surviving beliefs with player 1
    playing uniformly over ``allowed``.  ``witnesses[B]`` lists the states of
    the diagonal of ``B`` whose singleton is surely safe for player 2 in
    ``game``.
    """

    stage: int
    allowed: dict
    game: GameSpec
    product: ProductGame
    partition: PositivePartition
    witnesses: dict

    @property
    def removed(self) -> frozenset:
        return frozenset(self.witnesses)


@dataclass(frozen=True, eq=False)
class LGameResult:
    family: SupportFamily
    examined: SupportFamily
    as_p1: SupportFamily
    pos_p2: SupportFamily
    allowed_actions: dict          # belief -> tuple of player-1 actions
    p2_certificate: tuple          # StageCertificate per round that removed beliefs
    removal: dict                  # belief -> (stage, reason)

    def certificate_for(self, belief: int):
        """The stage certificate proving ``belief`` positively safe, or ``None``."""
        stage, reason = self.removal.get(belief, (None, None))
        if reason != "certificate":
            return None
        for cert in self.p2_certificate:
            if cert.stage == stage:
                return cert
        return None


def _allowed(spec: GameSpec, belief: int, alive) -> tuple:
    acts = []
    for i in spec.actions1:
        ok = True
        for c in spec.signals_of(1, i):
            nxt = pessimistic_successor(spec, belief, c)
            if nxt and nxt not in alive:
                ok = False
                break
        if ok:
            acts.append(i)
    return tuple(acts)


def _certify(product: ProductGame, live: dict, stage: int):
    """Beliefs of ``live`` whose diagonal holds a product state from which
    player 2 surely stays safe when player 1 plays uniformly over ``live``."""
    game = restrict_player1(product, live)
    inside = [n for n in range(len(product.pairs))
              if not product.target >> n & 1 and product.pairs[n][1] in live]
    part = sure_safety_fixpoint(game, p2_closure(game, [1 << n for n in inside]))
    witnesses = {}
    for b in live:
        found = tuple(n for n in bits(product.diag(b)) if 1 << n in part.sure_p2)
        if found:
            witnesses[b] = found
    if not witnesses:
        return None
    return StageCertificate(stage, dict(live), game, product, part, witnesses)


def solve_l_game(spec: GameSpec, family: SupportFamily, examined: SupportFamily) -> LGameResult:
    """Split ``examined`` into supports almost-surely winning for player 1 in
    the ``family``-game and supports positively winning for player 2.

    Candidate pessimistic beliefs are pruned until stable: a belief goes when
    no action keeps every possible next belief among the candidates, or when,
    in the product where player 1 plays uniformly over the allowed actions,
    some state of its diagonal is surely safe for player 2 on its own.
    """
    if not family.is_upward_closed(examined.elements):
        raise GameInputError("family is not upward-closed within the examined supports")
    nt = spec.nontarget_mask
    beliefs = closure(spec, list(examined.elements), [(1, True)], normalize=True)
    product = build_product_game(spec, family, beliefs)
    alive = {b for b in beliefs if b not in family}
    removal = {}
    certs = []
    stage = 0
    while True:
        allowed = {b: _allowed(spec, b, alive) for b in alive}
        stuck = {b for b in alive if not allowed[b]}
        if stuck:
            for b in stuck:
                removal[b] = (stage, "no-allowed-action")
            alive -= stuck
            stage += 1
            continue
        cert = _certify(product, allowed, stage) if allowed else None
        if cert is None:
            break
        certs.append(cert)
        for b in cert.witnesses:
            removal[b] = (stage, "certificate")
        alive -= set(cert.witnesses)
        stage += 1
    allowed = {b: _allowed(spec, b, alive) for b in alive}
    as_p1 = frozenset(m for m in examined.elements if m not in family and m & nt in alive)
    pos_p2 = frozenset(examined.elements) - as_p1
    return LGameResult(family, examined, SupportFamily(as_p1), SupportFamily(pos_p2),
                       allowed, tuple(certs), removal)


# -- outer chain ------------------------------------------------------------

def examined_universe(spec: GameSpec, supports, full_lattice: bool = False) -> SupportFamily:
    """Supports the chain classifies: the target-free parts of ``supports``
    closed under both players' pessimistic belief updates, or every nonempty
    target-free support with ``full_lattice``."""
    if full_lattice:
        return SupportFamily(frozenset(spec.lattice()))
    starts = [spec.mask(s) & spec.nontarget_mask for s in supports]
    return SupportFamily(frozenset(closure(spec, starts, [(1, True), (2, True)],
                                           normalize=True)))


@dataclass(frozen=True, eq=False)
class LChain:
    spec: GameSpec
    examined: SupportFamily
    levels: tuple        # SupportFamily per level, levels[0] empty
    results: tuple       # results[n] solves the levels[n]-game
    positive: PositivePartition
    classes: dict        # examined support -> ThreeWayClass

    @property
    def limit(self) -> SupportFamily:
        return self.levels[-1]

    def level_of(self, mask: int) -> int | None:
        for n, lv in enumerate(self.levels):
            if mask in lv:
                return n
        return None

    def classify(self, support) -> ThreeWayClass:
        m = self.spec.mask(support)
        if not m:
            raise GameInputError("support must be nonempty")
        core = m & self.spec.nontarget_mask
        if not core:
            return ThreeWayClass.ALMOST_SURE_P1
        if core not in self.examined:
            raise GameInputError(f"support {self.spec.format_support(m)} was not examined")
        if m == core and core in self.positive.sure_p2:
            return ThreeWayClass.SURE_P2
        if core not in self.limit:
            return ThreeWayClass.ALMOST_SURE_P1
        return ThreeWayClass.POSITIVE_BOTH


def almost_sure_iteration(spec: GameSpec, examined: SupportFamily) -> LChain:
    levels = [SupportFamily()]
    results = []
    while True:
        res = solve_l_game(spec, levels[-1], examined)
        results.append(res)
        nxt = res.pos_p2
        levels.append(nxt)
        if nxt.elements == levels[-2].elements:
            break
    positive = sure_safety_fixpoint(spec, p2_closure(spec, list(examined.elements)))
    classes = {}
    limit = levels[-1]
    for m in examined.elements:
        if m in positive.sure_p2:
            assert m in limit, "surely safe support outside the limit family"
            classes[m] = ThreeWayClass.SURE_P2
        elif m not in limit:
            classes[m] = ThreeWayClass.ALMOST_SURE_P1
        else:
            classes[m] = ThreeWayClass.POSITIVE_BOTH
    return LChain(spec, examined, tuple(levels), tuple(results), positive, classes)


def solve(spec: GameSpec, supports=None, full_lattice: bool = False) -> LChain:
    """Classify ``supports`` (default: the declared initial support) and every
    support examined on the way."""
    if supports is None:
        supports = [spec.initial_support()]
    return almost_sure_iteration(spec, examined_universe(spec, supports, full_lattice))


def classify_support(spec: GameSpec, support, full_lattice: bool = False) -> ThreeWayClass:
    m = spec.mask(support)
    if not m:
        raise GameInputError("support must be nonempty")
    chain = solve(spec, [m], full_lattice)
    cls = chain.classify(m)
    if cls is ThreeWayClass.ALMOST_SURE_P1 and m & spec.nontarget_mask:
        assert m & spec.nontarget_mask not in chain.positive.sure_p2
    return cls


# -- strategies ---------------------------------------------------------------

def _expect_class(chain: LChain, initial, wanted) -> int:
    m = chain.spec.mask(initial)
    cls = chain.classify(m)
    if cls not in wanted:
        raise Refusal(f"support {chain.spec.format_support(m)} is classified "
                      f"{cls.value}; expected {' or '.join(w.value for w in wanted)}")
    return m


def synthesize_as_p1(spec: GameSpec, chain: LChain, initial) -> FiniteMemoryStrategy:
    """Pessimistic-belief strategy playing uniformly over the allowed actions
    of the limit game."""
    m = _expect_class(chain, initial, (ThreeWayClass.ALMOST_SURE_P1,))
    return allowed_action_strategy(spec, chain, [m], kind="as")


def allowed_action_strategy(spec: GameSpec, chain: LChain, roots, kind="allowed"):
    """Pessimistic-belief strategy following the limit game's allowed actions
    where they are defined and playing uniformly elsewhere."""
    allowed = chain.results[-1].allowed_actions
    return belief_strategy(spec, 1, [spec.mask(r) for r in roots], allowed.get,
                           pessimistic=True, kind=kind)


@dataclass
class SwitchingConfig:
    """Per-step branch probabilities of the roaming phase: keep roaming,
    switch to a lower-level strategy, switch to a certificate strategy."""

    stay: float = 1 / 3
    lower: float = 1 / 3
    certificate: float = 1 / 3


def _cert_label(cert: StageCertificate, level: int, mask: int) -> str:
    names = sorted(cert.game.states[n] for n in bits(mask))
    return f"cert@{level}.{cert.stage}:{{{','.join(names)}}}"


def synthesize_positive_p2(spec: GameSpec, chain: LChain, initial,
                           config: SwitchingConfig | None = None) -> FiniteMemoryStrategy:
    """Hierarchical switching strategy for player 2 from a support of the limit
    family.

    At level ``n`` the roaming phase plays uniformly and, after each signal,
    either keeps roaming, jumps to the roaming phase of a uniformly picked
    support of level ``n-1`` (forgetting the past), or jumps to the
    certificate strategy of a uniformly picked support first added at level
    ``n``, guessing uniformly one of its surely safe witness pairs.  A
    certificate strategy tracks player 2's belief over (state, pessimistic
    belief) pairs from that guess; a belief the certificate cannot explain
    sends it to an absorbing uniformly-playing ``lost`` state.
    """
    config = config or SwitchingConfig()
    m = _expect_class(chain, initial, (ThreeWayClass.POSITIVE_BOTH, ThreeWayClass.SURE_P2))
    core = m & spec.nontarget_mask
    if chain.classify(m) is ThreeWayClass.SURE_P2:
        return synthesize_sure_p2(spec, chain.positive, m)

    levels = chain.levels
    acts = spec.actions2
    sigs = spec.signals2
    uniform = tuple((a, 1.0 / len(acts)) for a in acts)

    def own_level(b):
        return chain.level_of(b)

    labels = []
    pos = {}
    rows = []    # per memory: dict signal -> {label: prob}
    outputs = []
    pending = []

    def node(label):
        if label not in pos:
            pos[label] = len(labels)
            labels.append(label)
            rows.append(None)
            outputs.append(None)
            pending.append(label)
        return label

    certs = {}   # label -> (cert, mask, level)

    def roam_label(n):
        return node(f"roam@{n}")

    def roam_successors(n):
        dist = {}
        lower = sorted(levels[n - 1].elements)
        fresh = sorted(levels[n].elements - levels[n - 1].elements)
        p_stay = config.stay
        if lower:
            share = config.lower / len(lower)
            for b in lower:
                lab = roam_label(own_level(b))
                dist[lab] = dist.get(lab, 0.0) + share
        else:
            p_stay += config.lower
        here = roam_label(n)
        share = config.certificate / len(fresh)
        res = chain.results[n - 1]
        for b in fresh:
            cert = res.certificate_for(b)
            if cert is None:
                dist[here] = dist.get(here, 0.0) + share
                continue
            wit = cert.witnesses[b]
            for x in wit:
                lab = node(_cert_label(cert, n, 1 << x))
                certs[lab] = (cert, 1 << x, n)
                dist[lab] = dist.get(lab, 0.0) + share / len(wit)
        dist[here] = dist.get(here, 0.0) + p_stay
        return dist

    lost = "lost"
    start = roam_label(own_level(core))
    while pending:
        label = pending.pop()
        p = pos[label]
        if label == lost:
            rows[p] = {d: {lost: 1.0} for d in sigs}
            outputs[p] = uniform
        elif label.startswith("roam@"):
            n = int(label[5:])
            dist = roam_successors(n)
            rows[p] = {d: dict(dist) for d in sigs}
            outputs[p] = uniform
        else:
            cert, mask, n = certs[label]
            part = cert.partition
            outputs[p] = ((part.action_choice[mask], 1.0),)
            row = {}
            for d in sigs:
                post = cert.game.post(2, d)
                nxt = 0
                for q in bits(mask):
                    nxt |= post[q]
                if nxt in part.sure_p2:
                    lab = node(_cert_label(cert, n, nxt))
                    certs[lab] = (cert, nxt, n)
                else:
                    lab = node(lost)
                row[d] = {lab: 1.0}
            rows[p] = row
    update = tuple({d: tuple((pos[lab], pr) for lab, pr in sorted(row[d].items(),
                                                                    key=lambda kv: pos[kv[0]]))
                    for d in sigs} for row in rows)
    init = {}
    for b in chain.limit.elements:
        lab = f"roam@{own_level(b)}"
        if lab in pos:
            init[spec.members(b)] = pos[lab]
    init[spec.members(core)] = pos[start]
    return FiniteMemoryStrategy(
        player=2, actions=acts, signals=sigs, memory=tuple(labels), init=init,
        update=update, output=tuple(outputs), kind="positive", init_kind=TABLE,
        excluded=spec.targets,
        meta={"branch_probabilities": {"stay": config.stay, "lower": config.lower,
                                       "certificate": config.certificate}})
