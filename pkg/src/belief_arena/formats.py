"""Text formats: the line-oriented game description, strategy files and
classification reports."""

from __future__ import annotations

import json
import re
from fractions import Fraction

from pathlib import Path

from .errors import GameInputError, ParseError, ValidationFailed
from .game import GameSpec, SupportFamily, validate_game
from .strategy import FiniteMemoryStrategy

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
PROB_RE = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?\Z|\d+/\d+\Z")

LIST_DIRECTIVES = ("states", "target", "actions1", "actions2", "signals1", "signals2")


def _tokens(line):
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _name(tok, lineno):
    text, col = tok
    if not NAME_RE.match(text):
        raise ParseError(f"invalid name {text!r}", lineno, col)
    return text


def _prob(tok, lineno):
    text, col = tok
    if not PROB_RE.match(text):
        raise ParseError(f"invalid probability {text!r}", lineno, col)
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ParseError("zero denominator", lineno, col)
    return Fraction(text)


def parse_game(text: str, name: str = "game", validate: bool = True) -> GameSpec:
    """Parse a game description.

    ``absorbing`` states get, for every action pair, a self-loop emitting the
    first declared signal of each action.  Unless ``validate`` is false, the
    result is validated and :class:`ValidationFailed` is raised on errors.
    """
    lists = {}
    act = {}
    absorbing = []
    init = {}
    trans = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, col = toks[0]
        args = toks[1:]
        if head in LIST_DIRECTIVES:
            if head in lists:
                raise ParseError(f"duplicate directive {head!r}", lineno, col)
            lists[head] = tuple(_name(t, lineno) for t in args)
        elif head in ("act1", "act2"):
            for text_, c in args:
                if text_.count(":") != 1:
                    raise ParseError(f"expected sig:action, got {text_!r}", lineno, c)
                sig, a = text_.split(":")
                _name((sig, c), lineno)
                _name((a, c + len(sig) + 1), lineno)
                if sig in act:
                    raise ParseError(f"signal {sig!r} encoded twice", lineno, c)
                act[sig] = a
        elif head == "absorbing":
            absorbing.extend(_name(t, lineno) for t in args)
        elif head == "init":
            if len(args) % 2:
                raise ParseError("init expects state/probability pairs", lineno, col)
            for n in range(0, len(args), 2):
                s = _name(args[n], lineno)
                if s in init:
                    raise ParseError(f"state {s!r} listed twice in init", lineno, args[n][1])
                init[s] = _prob(args[n + 1], lineno)
        elif head == "trans":
            if len(args) < 8 or args[3][0] != "=":
                raise ParseError("expected 'trans k i j = p c d l | ...'", lineno, col)
            key = tuple(_name(t, lineno) for t in args[:3])
            if key in trans:
                raise ParseError(f"duplicate transition for {key}", lineno, col)
            outs = []
            rest = args[4:]
            chunk = []
            for tok in rest + [("|", None)]:
                if tok[0] == "|":
                    if len(chunk) != 4:
                        c0 = chunk[0][1] if chunk else tok[1]
                        raise ParseError("each outcome is 'p c d l'", lineno, c0)
                    outs.append((_prob(chunk[0], lineno), _name(chunk[1], lineno),
                                 _name(chunk[2], lineno), _name(chunk[3], lineno)))
                    chunk = []
                else:
                    chunk.append(tok)
            trans[key] = tuple(outs)
            where[key] = lineno
        else:
            raise ParseError(f"unknown directive {head!r}", lineno, col)

    for req in ("states", "actions1", "actions2", "signals1", "signals2"):
        if req not in lists:
            raise ParseError(f"missing directive {req!r}")
    states = lists["states"]
    a1, a2 = lists["actions1"], lists["actions2"]
    s1, s2 = lists["signals1"], lists["signals2"]
    for s in absorbing:
        if s not in states:
            raise ParseError(f"absorbing: unknown state {s!r}")
        for i in a1:
            ci = next((c for c in s1 if act.get(c) == i), None)
            for j in a2:
                dj = next((d for d in s2 if act.get(d) == j), None)
                if (s, i, j) in trans:
                    raise ParseError(f"transition given for absorbing state {s!r}",
                                     where[(s, i, j)])
                if ci is None or dj is None:
                    raise ParseError(f"absorbing {s!r}: action without a signal")
                trans[(s, i, j)] = ((Fraction(1), ci, dj, s),)
    for k in states:
        for i in a1:
            for j in a2:
                if (k, i, j) not in trans:
                    raise ParseError(f"incomplete kernel at ({k},{i},{j})")
    spec = GameSpec(states=states, targets=frozenset(lists.get("target", ())),
                    actions1=a1, actions2=a2, signals1=s1, signals2=s2,
                    act=act, trans=trans, init=init, name=name)
    if validate:
        report = validate_game(spec)
        if not report.ok:
            raise ValidationFailed(report)
    return spec


def load_game(path, validate: bool = True) -> GameSpec:
    p = Path(path)
    return parse_game(p.read_text(encoding="utf-8"), name=p.stem, validate=validate)


def format_prob(p) -> str:
    p = Fraction(p)
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def _is_absorbing(spec: GameSpec, k: str) -> bool:
    for i in spec.actions1:
        ci = spec.signals_of(1, i)[0]
        for j in spec.actions2:
            dj = spec.signals_of(2, j)[0]
            if tuple(spec.trans[(k, i, j)]) != ((Fraction(1), ci, dj, k),):
                return False
    return True


def serialize_game(spec: GameSpec) -> str:
    """Canonical text form; ``parse_game(serialize_game(g))`` rebuilds ``g``."""
    out = [f"# {spec.name}"]
    out.append("states " + " ".join(spec.states))
    out.append("target " + " ".join(s for s in spec.states if s in spec.targets))
    for key in ("actions1", "actions2", "signals1", "signals2"):
        out.append(key + " " + " ".join(getattr(spec, key)))
    out.append("act1 " + " ".join(f"{c}:{spec.act[c]}" for c in spec.signals1))
    out.append("act2 " + " ".join(f"{d}:{spec.act[d]}" for d in spec.signals2))
    absorbing = [k for k in spec.states if _is_absorbing(spec, k)]
    if absorbing:
        out.append("absorbing " + " ".join(absorbing))
    if spec.init:
        out.append("init " + " ".join(f"{s} {format_prob(p)}"
                                      for s, p in spec.init.items()))
    for k in spec.states:
        if k in absorbing:
            continue
        for i in spec.actions1:
            for j in spec.actions2:
                outs = " | ".join(f"{format_prob(p)} {c} {d} {l}"
                                  for p, c, d, l in spec.trans[(k, i, j)])
                out.append(f"trans {k} {i} {j} = {outs}")
    return "\n".join(out) + "\n"


def canonical_game(spec: GameSpec) -> tuple:
    """Order-insensitive description used to compare games for equality."""
    trans = {key: tuple(sorted((Fraction(p), c, d, l) for p, c, d, l in outs))
             for key, outs in spec.trans.items()}
    return (spec.states, spec.targets, spec.actions1, spec.actions2, spec.signals1,
            spec.signals2, dict(spec.act), trans,
            {s: Fraction(p) for s, p in spec.init.items()})


def parse_support(spec: GameSpec, text: str) -> int:
    """``"a,b"`` or ``"{a,b}"`` -> support bit-vector."""
    body = text.strip().strip("{}")
    names = [n.strip() for n in body.split(",") if n.strip()]
    return spec.mask(names)


def parse_distribution(spec: GameSpec, text: str) -> dict:
    """``"a:1/2,b:1/2"`` or a plain support ``"a,b"`` (uniform)."""
    body = text.strip().strip("{}")
    parts = [p.strip() for p in body.split(",") if p.strip()]
    if parts and all(":" in p for p in parts):
        dist = {}
        for p in parts:
            s, w = p.split(":")
            spec.mask([s])
            dist[s] = Fraction(w)
        return dist
    m = spec.mask(parts)
    names = spec.members(m)
    return {s: Fraction(1, len(names)) for s in names}


# -- strategies -------------------------------------------------------------------

STRATEGY_FORMAT = "belief-arena-strategy/1"


def _p12(p) -> float:
    return float(f"{float(p):.12g}")


def serialize_strategy(strategy: FiniteMemoryStrategy) -> str:
    """JSON text with probabilities rounded to 12 significant digits."""
    mem = strategy.memory
    doc = {
        "format": STRATEGY_FORMAT,
        "player": strategy.player,
        "kind": strategy.kind,
        "init_kind": strategy.init_kind,
        "excluded": sorted(strategy.excluded),
        "actions": list(strategy.actions),
        "signals": list(strategy.signals),
        "memory": list(mem),
        "init": [{"support": list(sup), "memory": mem[m]}
                 for sup, m in sorted(strategy.init.items())],
        "output": {mem[m]: [[a, _p12(p)] for a, p in dist]
                   for m, dist in enumerate(strategy.output)},
        "update": {mem[m]: {sig: [[mem[t], _p12(p)] for t, p in row[sig]]
                            for sig in strategy.signals}
                   for m, row in enumerate(strategy.update)},
        "meta": strategy.meta,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def parse_strategy(text: str) -> FiniteMemoryStrategy:
    """Inverse of :func:`serialize_strategy`; rejects malformed tables and
    distributions that do not sum to 1."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("format") != STRATEGY_FORMAT:
        raise ParseError(f"not a strategy file (expected format {STRATEGY_FORMAT!r})")
    try:
        mem = tuple(doc["memory"])
        index = {label: n for n, label in enumerate(mem)}
        if len(index) != len(mem):
            raise ParseError("duplicate memory labels")
        sigs = tuple(doc["signals"])

        def where(label):
            if label not in index:
                raise ParseError(f"unknown memory state {label!r}")
            return index[label]

        output = tuple(tuple((a, float(p)) for a, p in doc["output"][label]) for label in mem)
        update = tuple({sig: tuple((where(t), float(p)) for t, p in doc["update"][label][sig])
                        for sig in sigs} for label in mem)
        init = {tuple(sorted(e["support"])): where(e["memory"]) for e in doc["init"]}
        strat = FiniteMemoryStrategy(
            player=int(doc["player"]), actions=tuple(doc["actions"]), signals=sigs,
            memory=mem, init=init, update=update, output=output,
            kind=doc.get("kind", "custom"), init_kind=doc.get("init_kind", "table"),
            excluded=frozenset(doc.get("excluded", ())), meta=doc.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed strategy table: {exc!r}") from None
    if strat.player not in (1, 2):
        raise ParseError(f"player must be 1 or 2, got {strat.player}")
    problems = strat.check()
    if problems:
        raise ParseError("; ".join(problems))
    return strat


def load_strategy(path) -> FiniteMemoryStrategy:
    return parse_strategy(Path(path).read_text(encoding="utf-8"))


# -- classification report ---------------------------------------------------------

def write_classification_report(chain, partition) -> str:
    """JSON report of a solved chain; ``partition`` must come from the same
    game and cover every examined support."""
    spec = chain.spec
    if partition.universe.elements and not set(chain.examined.elements) <= set(
            partition.universe.elements):
        raise GameInputError("universe mismatch: the partition does not cover the examined supports")
    rows = []
    for m in sorted(chain.classes, key=lambda m: (bin(m).count("1"), spec.members(m))):
        cls = chain.classes[m]
        rows.append({"support": list(spec.members(m)), "class": cls.value})
    doc = {
        "game": spec.name,
        "universe_size": len(chain.examined),
        "chain_length": len(chain.levels),
        "classes": rows,
        "phi_fixpoint_size": len(partition.sure_p2),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def serialize_family(spec: GameSpec, family) -> str:
    """Support family as JSON (used for simulation certificates)."""
    members = sorted(family.elements if hasattr(family, "elements") else family,
                     key=lambda m: (bin(m).count("1"), spec.members(m)))
    return json.dumps({"supports": [list(spec.members(m)) for m in members]},
                      indent=1, sort_keys=True) + "\n"


def parse_family(spec: GameSpec, text: str):
    doc = json.loads(text)
    if isinstance(doc, dict):
        doc = doc.get("supports")
    if not isinstance(doc, list):
        raise ParseError("expected a list of supports")
    return SupportFamily(frozenset(spec.mask(list(s)) for s in doc))


__all__ = ["parse_game", "load_game", "serialize_game", "canonical_game",
           "parse_support", "parse_distribution", "format_prob", "serialize_strategy",
           "parse_strategy", "load_strategy", "write_classification_report",
           "serialize_family", "parse_family"]
