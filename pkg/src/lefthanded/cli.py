"""Command-line entry point: check, generate, verify, analyze, tcheck, bounds.

Exit codes: 0 clean, 1 property violation, 2 usage or schema error, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .colorings import (
    bits_to_string,
    color_vertex,
    coloring_conflicts,
    square_free_checker,
    thue_decode,
    usable_terms,
    verify_norm,
)
from .core import (
    ContractError,
    InstanceError,
    PrecisionError,
    SizeError,
    validate_lll,
    validate_order,
    validate_pstar_exhaustive,
)
from .engine import EngineTimeout, bad_events, compute_settlement_bound, stream_generate
from .games import TranscriptError, play_transcript
from .instances import APPS, GAME_APPS, TOY_APPS, Instance, build_instance, parse_fraction
from .sequences import adjacency_difference_checker, block_repetition_checker
from .tails import floor_sqrt
from .witness import (
    build_moser_tree,
    enumerate_trees,
    is_legal_log,
    order_breaks,
    run_t_check,
    verify_tree_invariants,
    weight_sum_check,
)

EXIT_CLEAN, EXIT_VIOLATION, EXIT_USAGE, EXIT_TIMEOUT = 0, 1, 2, 3
SCHEMA_VERSION = 1
PSTAR_EVENT_LIMIT = 20
DEFAULT_COLOR_RANGE = 2048


class SchemaError(ValueError):
    pass


def _emit(payload: dict, out: str | None = None) -> None:
    text = json.dumps({"version": SCHEMA_VERSION, **payload}, sort_keys=True, indent=1, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("window must look like LO,HI") from exc
    return lo, hi


def _load_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return data


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    data = _load_json(args.instance)
    if "app" not in data:
        raise SchemaError("instance needs an 'app' field")
    params = dict(data.get("params", {}))
    if "alpha" in data:
        params["alpha"] = data["alpha"]
    inst = build_instance(data["app"], params)
    family = inst.family
    window = args.window or tuple(data.get("window", (0, 20)))
    violations = []
    order = validate_order(family, window)
    violations += [{"check": "order", "detail": list(map(str, v))} for v in order.violations]
    lll = validate_lll(family, window)
    for row in lll.failures:
        violations.append({"check": "lll-condition", "event": list(row.event_id),
                           "pstar": str(row.pstar), "bound": str(row.bound)})
    if lll.witness is not None and not lll.witness.ok:
        violations.append({"check": "lll-condition", "witness": lll.witness.name,
                           "detail": lll.witness.details})
    pstar_checked, pstar_skipped = 0, 0
    events = sorted(family.events_with_vbl_within(*window), key=family.priority_key)
    for e in events[:PSTAR_EVENT_LIMIT]:
        try:
            ok = validate_pstar_exhaustive(family, e)
        except SizeError:
            pstar_skipped += 1
            continue
        pstar_checked += 1
        if not ok:
            violations.append({"check": "pstar", "event": list(e.id)})
    _emit({"command": "check", "app": inst.app, "params": inst.params, "window": list(window),
           "events_checked": order.events_checked, "lll_rows": len(lll.rows),
           "pstar_checked": pstar_checked, "pstar_skipped": pstar_skipped,
           "violations": violations, "ok": not violations}, args.out)
    return EXIT_VIOLATION if violations else EXIT_CLEAN


# ---------------------------------------------------------------- generate

def _params_from_args(args) -> dict:
    params: dict = {}
    if args.epsilon is not None:
        params["epsilon"] = str(parse_fraction(args.epsilon))
    if args.threshold is not None:
        params["threshold"] = args.threshold
    if args.app in GAME_APPS:
        params["oracle"] = args.oracle or "copycat"
        params["oracle_seed"] = args.oracle_seed
    if args.app == "lacunary":
        params["sequence"] = args.sequence
    if args.app == "thue":
        if args.list_seed is not None:
            params["lists"] = {"kind": "random", "seed": args.list_seed,
                               "universe": args.universe, "size": 6}
        elif args.lists:
            params["lists"] = _load_json(args.lists)
    return params


def generate_artifact(app: str, params: dict, length: int, seed: int, delta=None,
                      color_range: int = DEFAULT_COLOR_RANGE) -> dict:
    inst = build_instance(app, params)
    family = inst.family
    variables = math.ceil(length / 2) if app in GAME_APPS else length
    result = stream_generate(family, variables, delta, seed)
    manifest = {"command": "generate", "app": app, "params": inst.params, "length": length,
                "seed": seed, "delta": None if delta is None else str(delta),
                "tool_version": __version__}
    artifact = {"manifest": manifest,
                "certificate": {"ok": result.certificate.ok,
                                "window": list(result.window),
                                "violations": [list(v) for v in result.certificate.violations],
                                "events_checked": result.certificate.events_checked},
                "stages": len(result.log),
                "log": [list(entry.event.id) for entry in result.log]}
    if delta is not None:
        artifact["records"] = result.records
    if app in ("beck", "alon"):
        artifact["sequence"] = bits_to_string(result.prefix)
    elif app in GAME_APPS:
        oracle = inst.extras["oracle"].fresh()
        artifact["player_bits"] = bits_to_string(result.prefix)
        artifact["transcript"] = bits_to_string(play_transcript(result.prefix, oracle)[:length])
        artifact["oracle"] = oracle.describe()
    elif app == "lacunary":
        bits = result.prefix
        J = usable_terms(inst.details, len(bits))
        report = verify_norm(bits, inst.details, J, inst.details.delta)
        artifact["theta_bits"] = bits_to_string(bits)
        artifact["terms_verified"] = J
        artifact["norm_failures"] = report.failures
        artifact["colors"] = {"k": inst.details.k, "lo": 0, "hi": color_range,
                              "values": [color_vertex(bits, inst.details.delta, x)
                                         for x in range(color_range + 1)]}
    elif app == "thue":
        artifact["triples"] = list(result.prefix)
        artifact["colors"] = family.make_view(list(result.prefix)).colors(length)
    else:
        artifact["sequence"] = list(result.prefix)
    return artifact


def cmd_generate(args) -> int:
    if args.app not in APPS + TOY_APPS:
        raise SchemaError(f"--app must be one of {', '.join(APPS + TOY_APPS)}")
    delta = parse_fraction(args.delta) if args.delta is not None else None
    artifact = generate_artifact(args.app, _params_from_args(args), args.length, args.seed,
                                 delta, args.color_range)
    _emit(artifact, args.out)
    return EXIT_CLEAN if artifact["certificate"]["ok"] else EXIT_VIOLATION


# ---------------------------------------------------------------- verify

def _bits(text, name) -> list[int]:
    if not isinstance(text, str) or any(c not in "01" for c in text):
        raise SchemaError(f"artifact field {name!r} must be a bit string")
    return [int(c) for c in text]


def verify_artifact(app: str, artifact: dict) -> list[dict]:
    manifest = artifact.get("manifest")
    if not isinstance(manifest, dict) or manifest.get("app") != app:
        raise SchemaError(f"artifact is not a {app} artifact")
    try:
        inst = build_instance(app, manifest["params"])
        length = int(manifest["length"])
    except KeyError as exc:
        raise SchemaError(f"manifest lacks {exc}") from exc
    violations: list[dict] = []
    try:
        if app in ("beck", "alon"):
            seq = _bits(artifact["sequence"], "sequence")
            if len(seq) != length:
                raise SchemaError("sequence length does not match the manifest")
            p = inst.details
            if app == "beck":
                hits = block_repetition_checker(seq, p.f, p.N)
            else:
                hits = adjacency_difference_checker(seq, Fraction(1, 2) - p.epsilon, p.N)
            violations += [{"check": "repetition" if app == "beck" else "adjacent-blocks",
                            "at": list(h)} for h in hits]
        elif app in GAME_APPS:
            player = _bits(artifact["player_bits"], "player_bits")
            transcript = _bits(artifact["transcript"], "transcript")
            if len(transcript) != length:
                raise SchemaError("transcript length does not match the manifest")
            replay = play_transcript(player, inst.extras["oracle"].fresh())[:length]
            if replay != transcript:
                violations.append({"check": "oracle-replay"})
            p = inst.details
            if app == "beck-game":
                ratio = 2 - p.epsilon
                hits = block_repetition_checker(transcript, lambda n: floor_sqrt(ratio ** n), p.N)
            else:
                hits = adjacency_difference_checker(transcript, Fraction(1, 4) - p.epsilon, p.N)
            violations += [{"check": "game-blocks", "at": list(h)} for h in hits]
        elif app == "lacunary":
            bits = _bits(artifact["theta_bits"], "theta_bits")
            if len(bits) != length:
                raise SchemaError("theta length does not match the manifest")
            lac = inst.details
            J = usable_terms(lac, len(bits))
            report = verify_norm(bits, lac, J, lac.delta)
            violations += [{"check": "norm", "term": j} for j in report.failures]
            colors = artifact.get("colors")
            if colors is not None:
                lo, hi, values = int(colors["lo"]), int(colors["hi"]), list(colors["values"])
                if len(values) != hi - lo + 1:
                    raise SchemaError("colour table has the wrong size")
                recomputed = [color_vertex(bits, lac.delta, x) for x in range(lo, hi + 1)]
                if recomputed != values:
                    violations.append({"check": "color-table"})
                terms = _terms_up_to(lac, hi - lo)
                for u, v in coloring_conflicts(bits, lac.delta, terms, lo, hi):
                    violations.append({"check": "monochromatic-edge", "at": [u, v]})
        elif app == "thue":
            triples = [int(v) for v in artifact["triples"]]
            colors = [int(v) for v in artifact["colors"]]
            if len(colors) != length or len(triples) < length:
                raise SchemaError("colour sequence length does not match the manifest")
            lists = inst.details
            if thue_decode(triples[:length], lists) != colors:
                violations.append({"check": "decode"})
            violations += [{"check": "list", "at": i} for i, c in enumerate(colors) if c not in lists(i)]
            violations += [{"check": "square", "at": list(h)} for h in square_free_checker(colors)]
        else:
            seq = [int(v) for v in artifact["sequence"]]
            if len(seq) != length:
                raise SchemaError("sequence length does not match the manifest")
            family = inst.family
            held = bad_events(family, family.make_view(seq), 0, length - 1)
            violations += [{"check": "event", "at": list(e.id)} for e in held]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed artifact: {exc!r}") from exc
    return violations


def _terms_up_to(lac, limit):
    out = []
    for j in lac.indices():
        if lac.n(j) > limit:
            break
        out.append(lac.n(j))
    return out


def cmd_verify(args) -> int:
    artifact = _load_json(args.artifact)
    violations = verify_artifact(args.app, artifact)
    _emit({"command": "verify", "app": args.app, "violations": violations,
           "ok": not violations}, args.out)
    return EXIT_VIOLATION if violations else EXIT_CLEAN


# ---------------------------------------------------------------- analyze

def analyze_log(inst: Instance, ids: list, max_nodes: int = 0) -> dict:
    family = inst.family
    events = [family.event(tuple(i)) for i in ids]
    report: dict = {"stages": len(events)}
    if not events:
        report.update(legal=True, trees=[], invariants=[], weight_sums=[])
        return report
    legal = is_legal_log(family, events)
    report["legal"] = legal
    report["order_breaks"] = [list(p) for p in order_breaks(family, events)]
    if not legal:
        report.update(trees=[], invariants=[], weight_sums=[])
        return report
    trees, invariants = [], []
    for m in range(1, len(events) + 1):
        tree = build_moser_tree(family, events[:m])
        trees.append({"stage": m, **tree.as_dict()})
        inv = verify_tree_invariants(family, tree, events[:m])
        invariants.append({"stage": m, "ok": inv.ok, "failures": inv.failures})
    report["trees"] = trees
    report["invariants"] = invariants
    report["distinct_trees"] = len({json.dumps(t["labels"]) + json.dumps(t["parents"]) for t in trees})
    sums = []
    if max_nodes > 0:
        for root in sorted({e.id for e in events}):
            w = weight_sum_check(family, root, max_nodes)
            sums.append({"root": list(root), "trees": w.trees, "sum": str(w.truncated_sum),
                         "bound": str(w.bound), "ok": w.ok})
    report["weight_sums"] = sums
    return report


def cmd_analyze(args) -> int:
    data = _load_json(args.log)
    manifest = data.get("manifest", data)
    app = args.app or manifest.get("app")
    if app is None:
        raise SchemaError("log file names no app; pass --app")
    inst = build_instance(app, manifest.get("params", {}))
    ids = data.get("log")
    if not isinstance(ids, list):
        raise SchemaError("log file needs a 'log' list of event ids")
    report = analyze_log(inst, ids, args.max_nodes)
    _emit({"command": "analyze", "app": app, **report}, args.out)
    return EXIT_CLEAN


# ---------------------------------------------------------------- tcheck

def cmd_tcheck(args) -> int:
    inst = build_instance(args.app, {"count": args.count} if args.app != "single-bit" else {})
    family = inst.family
    if family.num_variables is None:
        raise SchemaError("tcheck needs a finite family")
    roots = family.enumerate_by_priority(1)
    rows, failed = [], False
    for tree in enumerate_trees(family, roots[0], args.max_nodes):
        passes = sum(run_t_check(family, tree, seed=args.seed * 10 ** 9 + t).passed
                     for t in range(args.trials))
        weight = tree.weight()
        sigma = math.sqrt(float(weight) * (1 - float(weight)) / args.trials)
        rate = passes / args.trials
        ok = rate <= float(weight) + 4 * sigma
        failed |= not ok
        rows.append({"tree": tree.as_dict(), "weight": str(weight), "pass_rate": rate, "ok": ok})
    _emit({"command": "tcheck", "app": args.app, "trials": args.trials, "trees": rows,
           "ok": not failed}, args.out)
    return EXIT_VIOLATION if failed else EXIT_CLEAN


# ---------------------------------------------------------------- bounds

def cmd_bounds(args) -> int:
    params = {"count": args.count} if args.app in ("toy3", "disjoint-blocks") else {}
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    inst = build_instance(args.app, params)
    delta = parse_fraction(args.delta or "1/10")
    rows = []
    available = getattr(inst.family, "settlement_available", True)
    for i in range(args.length):
        if not available:
            rows.append({"index": i, "N": None, "reason": f"{args.app}: settlement not available"})
            continue
        try:
            bound = compute_settlement_bound(inst.family, i, delta)
            rows.append({"index": i, "N": bound.N})
        except ContractError as exc:
            rows.append({"index": i, "N": None, "reason": str(exc)})
    _emit({"command": "bounds", "app": args.app, "delta": str(delta), "rows": rows}, args.out)
    return EXIT_CLEAN


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lefthanded", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate an instance file")
    p.add_argument("instance")
    p.add_argument("--window", type=_window)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("generate", help="run the resampler and write an artifact")
    p.add_argument("--app", required=True)
    p.add_argument("--epsilon")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", help="record settlement bounds with this error")
    p.add_argument("--threshold", type=int, help="override N (the result is then unverified)")
    p.add_argument("--oracle", help="copycat, constant[:bit], seeded-random[:seed], "
                                    "block-mirror[:lag] or subprocess:<command>")
    p.add_argument("--oracle-seed", type=int, default=0)
    p.add_argument("--sequence", default="powers:2")
    p.add_argument("--list-seed", type=int)
    p.add_argument("--universe", type=int, default=10)
    p.add_argument("--lists", help="JSON list specification for thue")
    p.add_argument("--color-range", type=int, default=DEFAULT_COLOR_RANGE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="re-check an artifact independently of generation")
    p.add_argument("artifact")
    p.add_argument("--app", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="legality, Moser trees and invariants of a resample log")
    p.add_argument("log")
    p.add_argument("--app")
    p.add_argument("--max-nodes", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("tcheck", help="Monte Carlo T-check pass rates on a micro family")
    p.add_argument("--app", default="toy3")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--max-nodes", type=int, default=2)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tcheck)

    p = sub.add_parser("bounds", help="settlement stage bounds N(i, delta)")
    p.add_argument("--app", default="toy3")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--length", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_CLEAN
    try:
        return args.func(args)
    except EngineTimeout as exc:
        sys.stderr.write(f"timeout: {exc}\n")
        return EXIT_TIMEOUT
    except (SchemaError, InstanceError, PrecisionError, TranscriptError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
