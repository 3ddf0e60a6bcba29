"""Command-line entry point: ``belief-arena <command> ...``.

Exit codes: 0 success, 1 invalid input or refused request, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .almost_sure import ThreeWayClass, solve, synthesize_as_p1, synthesize_positive_p2
from .arena import estimate_reach
from .errors import BeliefArenaError, GuardExceeded, ValidationFailed
from .formats import (load_game, load_strategy, parse_distribution, parse_family,
                      parse_game, parse_support, serialize_family, serialize_game,
                      serialize_strategy, write_classification_report)
from .game import validate_game
from .generate import Profile, generate_random_game
from .positive import positive_partition, synthesize_sure_p2
from .strategy import uniform_random_strategy

SEED_ENV = "BELIEF_ARENA_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV} must be an integer, got {raw!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _supports(spec, inits):
    if not inits:
        return [spec.initial_support()]
    return [parse_support(spec, s) for s in inits]


# -- commands -------------------------------------------------------------------------

def cmd_validate(args) -> int:
    text = Path(args.game).read_text(encoding="utf-8")
    try:
        spec = parse_game(text, name=Path(args.game).stem, validate=False)
    except BeliefArenaError as exc:
        print(f"{args.game}: {exc}", file=sys.stderr)
        return 1
    report = validate_game(spec)
    print(report.render())
    return 0 if report.ok else 1


def cmd_classify(args) -> int:
    spec = load_game(args.game)
    supports = _supports(spec, args.init)
    chain = solve(spec, supports, full_lattice=args.full_lattice)
    _emit(write_classification_report(chain, chain.positive), args.output)
    if args.certificate_out:
        Path(args.certificate_out).write_text(serialize_family(spec, chain.positive.sure_p2),
                                              encoding="utf-8")
    return 0


def cmd_synthesize(args) -> int:
    spec = load_game(args.game)
    kind, player = args.kind, args.player
    wanted = {"sure": 2, "as": 1, "positive": 2}
    if kind in wanted and wanted[kind] != player:
        print(f"error: --kind {kind} is a strategy of player {wanted[kind]}", file=sys.stderr)
        return 2
    if kind == "random":
        strat = uniform_random_strategy(spec, player)
    else:
        m = _supports(spec, [args.init] if args.init else None)[0]
        if kind == "sure":
            strat = synthesize_sure_p2(spec, positive_partition(spec, [m], args.full_lattice), m)
        else:
            chain = solve(spec, [m], full_lattice=args.full_lattice)
            synth = synthesize_as_p1 if kind == "as" else synthesize_positive_p2
            strat = synth(spec, chain, m)
    _emit(serialize_strategy(strat), args.output)
    return 0


def _strategy(spec, source: str, player: int):
    if source == "random":
        return uniform_random_strategy(spec, player)
    return load_strategy(source)


def cmd_simulate(args) -> int:
    spec = load_game(args.game)
    sigma = _strategy(spec, args.p1, 1)
    tau = _strategy(spec, args.p2, 2)
    delta = parse_distribution(spec, args.init) if args.init else dict(spec.init)
    cert = None
    if args.certificate:
        cert = parse_family(spec, Path(args.certificate).read_text(encoding="utf-8"))
    seed = _default_seed() if args.seed is None else args.seed
    report = estimate_reach(spec, sigma, tau, delta, args.episodes, args.horizon, seed,
                            certificate=cert)
    doc = report.as_dict()
    doc["game"] = spec.name
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.output)
    return 0 if report.belief_violations == 0 else 1


def cmd_oracle_check(args) -> int:
    from .oracle import (losing_supports_least_fixpoint, perfect_info_solver,
                         reach_value_vectors, revealing_problems)
    spec = load_game(args.game)
    doc = {"game": spec.name}
    ok = True
    part = positive_partition(spec, [], full_lattice=True)
    losing = losing_supports_least_fixpoint(spec, max_states=args.max_states)
    mismatch = set(spec.lattice()) - set(part.sure_p2.elements) ^ set(losing.elements)
    doc["duality_mismatches"] = len(mismatch)
    ok &= not mismatch
    horizon = args.horizon if args.horizon is not None else 2 ** len(spec.states)
    chain = solve(spec, full_lattice=True)
    try:
        value = reach_value_vectors(spec, horizon)
        bad = []
        for m in sorted(chain.examined.elements):
            positive = m not in part.sure_p2
            if (value(m) > 0) != positive:
                bad.append(spec.format_support(m))
        doc["witness_horizon"] = horizon
        doc["witness_failures"] = bad
        ok &= not bad
    except GuardExceeded as exc:
        doc["witness_skipped"] = str(exc)
    if not revealing_problems(spec):
        pi = perfect_info_solver(spec)
        disagree = [s for s in spec.states
                    if chain_class(spec, s) != pi[s]]
        doc["perfect_info_disagreements"] = disagree
        ok &= not disagree
    doc["ok"] = bool(ok)
    print(json.dumps(doc, indent=1, sort_keys=True))
    return 0 if ok else 1


def chain_class(spec, state: str) -> str:
    m = spec.mask([state])
    return solve(spec, [m]).classify(m).value


def cmd_gen(args) -> int:
    profile = Profile.parse(args.profile) if args.profile else Profile()
    seed = _default_seed() if args.seed is None else args.seed
    _emit(serialize_game(generate_random_game(profile, seed)), args.output)
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="belief-arena",
                                description="Solve and simulate partial-observation "
                                            "stochastic reachability games.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a game file")
    v.add_argument("game")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("classify", help="three-way classification report")
    c.add_argument("game")
    c.add_argument("--init", action="append", help="support such as 'a,b' (repeatable)")
    c.add_argument("--full-lattice", action="store_true")
    c.add_argument("--certificate-out", help="write player 2's surely safe supports here")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("synthesize", help="write a witness strategy")
    s.add_argument("game")
    s.add_argument("--player", type=int, choices=(1, 2), required=True)
    s.add_argument("--kind", choices=("random", "sure", "as", "positive"), required=True)
    s.add_argument("--init")
    s.add_argument("--full-lattice", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_synthesize)

    m = sub.add_parser("simulate", help="Monte-Carlo estimate of the reach probability")
    m.add_argument("game")
    m.add_argument("--p1", default="random", help="strategy file or 'random'")
    m.add_argument("--p2", default="random", help="strategy file or 'random'")
    m.add_argument("--init", help="distribution 'a:1/2,b:1/2' or support 'a,b'")
    m.add_argument("--episodes", type=_positive, default=10000)
    m.add_argument("--horizon", type=_positive, default=1000)
    m.add_argument("--seed", type=int)
    m.add_argument("--certificate", help="JSON list of player 2's surely safe supports")
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle-check", help="cross-check solvers against brute force")
    o.add_argument("game")
    o.add_argument("--horizon", type=int)
    o.add_argument("--max-states", type=int, default=4)
    o.set_defaults(func=cmd_oracle_check)

    g = sub.add_parser("gen", help="print a random game")
    g.add_argument("--profile", help="e.g. 'K=3,T=1,I=2,J=2,C=2,D=2'")
    g.add_argument("--seed", type=int)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)
    return p


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BeliefArenaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
