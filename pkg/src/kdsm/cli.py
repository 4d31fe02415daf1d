"""Command-line entry point.

Subcommands: gen, reduce, verify, solve, induce, experiment. Every flag can
also be set through an environment variable named ``KDSM_<FLAG>`` (dashes
become underscores); explicit flags win. Each run echoes its resolved
configuration on stderr. Exit codes are a stable contract: 0 success (or
stable), 1 unstable (or experiment failures), 2 invalid input, 3 resource
bound exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Callable, Sequence

from . import genlab, reductions, solve
from .core import (
    FormatError,
    KdsmError,
    Matching,
    SpaceTooLargeError,
    parse_instance,
    parse_matching,
    serialize_instance,
    serialize_matching,
    validate_instance,
    validate_matching,
)
from .verify import is_weakly_stable

EXIT_OK = 0
EXIT_UNSTABLE = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3


def _env_default(flag: str, cast: Callable, fallback):
    raw = os.environ.get("KDSM_" + flag.upper().replace("-", "_"))
    if raw is None:
        return fallback
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        raise SystemExit(f"invalid value {raw!r} for KDSM_{flag.upper()}")


def _add(parser: argparse.ArgumentParser, flag: str, cast, default, **kw):
    parser.add_argument(
        f"--{flag}", type=cast, default=_env_default(flag, cast, default), **kw
    )


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, payload: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(payload)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)


def _echo_config(args: argparse.Namespace) -> None:
    pairs = " ".join(
        f"{key}={getattr(args, key)!r}"
        for key in sorted(vars(args))
        if key != "handler"
    )
    print(f"kdsm config: {pairs}", file=sys.stderr)


def _load_instance(path: str):
    inst = parse_instance(_read(path))
    report = validate_instance(inst)
    if not report.ok:
        raise FormatError("invalid instance: " + "; ".join(report.violations))
    return inst


def cmd_gen(args) -> int:
    inst = genlab.random_instance(args.seed, args.k, args.n, args.density)
    _write(args.out, serialize_instance(inst))
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst = _load_instance(args.instance)
    if args.mode == "3k":
        out, cmap = reductions.lift_3_to_k(inst, args.target_k)
        map_payload = cmap.serialize()
    elif args.mode == "complete":
        out, gmap = reductions.complete_instance(inst, args.shuffle_seed)
        map_payload = gmap.serialize()
    else:
        raise FormatError(f"unknown reduction mode {args.mode!r}")
    _write(args.out, serialize_instance(out))
    if args.map_out:
        _write(args.map_out, map_payload)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    m = parse_matching(_read(args.matching))
    report = validate_matching(inst, m)
    if not report.ok:
        print("INVALID", file=sys.stdout)
        for v in report.violations:
            print(f"violation {v}", file=sys.stderr)
        return EXIT_INVALID
    verdict = is_weakly_stable(inst, m, method=args.method)
    if verdict.stable:
        print("STABLE")
        return EXIT_OK
    witness = " ".join(str(x) for x in verdict.witness.members)
    print(f"UNSTABLE witness {witness}")
    return EXIT_UNSTABLE


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    if args.mode == "count":
        print(solve.count_weakly_stable(inst))
        return EXIT_OK
    if args.mode == "enumerate":
        matchings = solve.enumerate_weakly_stable(inst, limit=args.limit)
        for idx, m in enumerate(matchings):
            if idx:
                print()
            sys.stdout.write(serialize_matching(m))
        return EXIT_OK
    if args.mode == "find":
        budget = solve.Budget(max_nodes=args.budget, max_seconds=args.time_limit)
        outcome = solve.find_weakly_stable(inst, budget)
        print(outcome.status.value)
        print(f"nodes {outcome.nodes_explored}")
        if outcome.matching is not None:
            sys.stdout.write(serialize_matching(outcome.matching))
        return EXIT_OK
    raise FormatError(f"unknown solve mode {args.mode!r}")


def _matching_of_instance(inst, m: Matching, what: str) -> None:
    report = validate_matching(inst, m)
    if not report.ok:
        raise FormatError(f"{what} does not fit the instance: " + "; ".join(report.violations))


def cmd_induce(args) -> int:
    if not args.map or not args.matching:
        raise FormatError("induce requires --map and --matching")
    mapping = reductions.parse_map(_read(args.map))
    m = parse_matching(_read(args.matching))
    if isinstance(mapping, reductions.CorrMap3K):
        out = reductions.transport_matching(mapping, m, args.direction)
    else:
        inst = _load_instance(args.instance) if args.instance else None
        if args.direction == "down":
            if inst is None:
                raise FormatError("--instance (the original input) is required for down")
            mapping = mapping.with_source(inst)
            out = reductions.induce_down(mapping, m)
        else:
            if inst is not None:
                mapping = mapping.with_source(inst)
                _matching_of_instance(inst, m, "matching")
            out = reductions.induce_up(mapping, m)
    _write(args.out, serialize_matching(out))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.id not in genlab.EXPERIMENT_IDS:
        print(f"unknown experiment id {args.id!r}", file=sys.stderr)
        print("known ids: " + ", ".join(genlab.EXPERIMENT_IDS), file=sys.stderr)
        return EXIT_INVALID
    report = genlab.run_experiment(
        args.id,
        k=args.k,
        n=args.n,
        samples=args.samples,
        seed=args.seed,
        target_k=args.target_k,
        threads=args.threads,
        full=args.full,
    )
    _write(args.out, genlab.serialize_report(report))
    return EXIT_OK if report.ok else EXIT_UNSTABLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdsm",
        description="k-dimensional stable matching with cyclic preferences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded random instance")
    _add(p, "k", int, 3)
    _add(p, "n", int, 2)
    _add(p, "seed", int, 0)
    _add(p, "density", float, 1.0)
    _add(p, "out", str, None)
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("reduce", help="run a reduction on an instance file")
    p.add_argument("instance")
    _add(p, "mode", str, "complete", choices=("3k", "complete"))
    _add(p, "target-k", int, 5)
    _add(p, "shuffle-seed", int, None, help="shuffle arbitrary-order tails")
    _add(p, "out", str, None)
    _add(p, "map-out", str, None)
    p.set_defaults(handler=cmd_reduce)

    p = sub.add_parser("verify", help="decide weak stability of a matching")
    p.add_argument("instance")
    p.add_argument("matching")
    _add(p, "method", str, "auto", choices=("naive", "cycle", "auto"))
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("solve", help="find, enumerate, or count stable matchings")
    p.add_argument("instance")
    _add(p, "mode", str, "find", choices=("find", "enumerate", "count"))
    _add(p, "budget", int, None, help="node budget for --mode find")
    _add(p, "time-limit", float, None)
    _add(p, "limit", int, None, help="result cap for --mode enumerate")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("induce", help="transport a matching across a reduction map")
    _add(p, "direction", str, "up", choices=("up", "down"))
    _add(p, "map", str, None, help="map file written by reduce")
    _add(p, "matching", str, None)
    _add(p, "instance", str, None, help="original input instance (needed for down)")
    _add(p, "out", str, None)
    p.set_defaults(handler=cmd_induce)

    p = sub.add_parser("experiment", help="run a scripted experiment")
    _add(p, "id", str, None)
    _add(p, "k", int, None)
    _add(p, "n", int, None)
    _add(p, "samples", int, None)
    _add(p, "seed", int, 0)
    _add(p, "target-k", int, 5)
    _add(p, "threads", int, 1)
    p.add_argument(
        "--full",
        action=argparse.BooleanOptionalAction,
        default=_env_default("full", bool, False),
        help="force exhaustive coverage for the bound experiments",
    )
    _add(p, "out", str, None)
    p.set_defaults(handler=cmd_experiment)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_config(args)
    try:
        return args.handler(args)
    except SpaceTooLargeError as exc:
        print(f"error: {exc} (required {exc.required}, bound {exc.bound})", file=sys.stderr)
        return EXIT_RESOURCE
    except (KdsmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
