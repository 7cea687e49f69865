"""Command-line front end: ``halflib {verify,moments,purity,irrep,partitions}``.

Exit codes are shared by every subcommand: 0 when all checks pass, 1 when a
check fails, 2 for usage or configuration errors.  Reports are JSON (or CSV
for moment tables) and carry a ``schema`` field.  Wall-clock time is stored
under ``timing`` so that the rest of a report is reproducible bit for bit.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
import time

import numpy as np

from . import __version__
from .integrate import moment_table, table_to_csv, table_to_json
from .model import (DiagonalSampler, SphereSampler, UnitarySampler, check_identities, commutant_dimension,
                    eval_word, irrep_point, verify_relations)
from .ncalg import IDENTITY_PACKS, QUANTUM_SPACES, SPACE_IDS, identity_pack, letter, relation_preset
from .partitions import (PRESETS, SizeCapExceeded, closure, enumerate_pairings, format_partition,
                         intertwiner_residual, parse_partition, preset, t_map)
from .puretensor import EXHAUSTIVE_LIMIT, Tensor, factorize, segre_residual, tensor_of

SCHEMA = "halflib.run/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MODELS = ("k_half_sphere", "unk_quantum_group", "diagonal")


class UsageError(Exception):
    pass


def _samplers(model: str, N: int, K: int):
    if model == "k_half_sphere":
        return SphereSampler(N, K)
    if model == "unk_quantum_group":
        return UnitarySampler(N, K)
    return DiagonalSampler(N, K)


def _resolve_seed(args) -> int:
    if args.seed is not None and args.random_seed:
        raise UsageError("give either --seed or --random-seed, not both")
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be nonnegative")
        return args.seed
    if args.random_seed:
        return secrets.randbits(63)
    raise UsageError("randomized subcommand: pass --seed INT (or --random-seed to draw and record one)")


def _positive(args, *names):
    for n in names:
        v = getattr(args, n, None)
        if v is not None and v <= 0:
            raise UsageError("--%s must be positive" % n.replace("_", "-"))


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "random_seed", "seed")}
    cfg["env"] = {k: os.environ[k] for k in ("HALFLIB_THREADS", "HALFLIB_SIZE_CAP") if k in os.environ}
    return cfg


def _envelope(args, seed, checks, passed, started) -> dict:
    return {"schema": SCHEMA, "tool_version": __version__, "subcommand": args.command,
            "config": _config(args), "seed": seed, "checks": checks, "pass": passed,
            "timing": {"wall_clock_s": time.perf_counter() - started}}


# ---------------------------------------------------------------------------


def cmd_verify(args):
    _positive(args, "N", "K", "samples", "tol", "word_length_bound")
    if args.space not in SPACE_IDS:
        raise UsageError("unknown space %r" % args.space)
    seed = _resolve_seed(args)
    model = args.against_model or ("unk_quantum_group" if args.space in QUANTUM_SPACES else "k_half_sphere")
    if (args.space in QUANTUM_SPACES) != (model == "unk_quantum_group"):
        raise UsageError("space %s cannot be evaluated on model %s" % (args.space, model))
    packs = [p for p in (args.packs or "").split(",") if p]
    for p in packs:
        if p not in IDENTITY_PACKS:
            raise UsageError("unknown identity pack %r (choose from %s)" % (p, ", ".join(IDENTITY_PACKS)))
    try:
        rels = relation_preset(args.space, args.N, args.K, args.word_length_bound)
    except ValueError as e:
        raise UsageError(str(e))
    sampler = _samplers(model, args.N, args.K)
    points = sampler.draw(args.samples, seed)
    reports = [verify_relations(rels, sampler, args.samples, args.tol, seed, points=points)]
    for p in packs:
        triples = identity_pack(p, args.N, args.K)
        reports.append(check_identities(triples, sampler, args.samples, args.tol, seed, space=p, points=points))
    for r in reports:
        for f in r.failures():
            print("FAIL %s: %s (residual %.3g at sample %d)" % (r.space, f.text, f.max_residual,
                                                                f.argmax_sample_index), file=sys.stderr)
    passed = all(r.passed for r in reports)
    return [r.to_dict() for r in reports], passed, seed


def _read_words(args) -> list:
    words = list(args.word or [])
    if args.words:
        with open(args.words) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    words.append(line)
    if not words:
        raise UsageError("no words given (use --word or --words FILE)")
    return words


def cmd_moments(args):
    _positive(args, "N", "K")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    seed = _resolve_seed(args)
    words = _read_words(args)
    try:
        rows = moment_table(words, args.space, args.N, args.K, args.samples, seed)
    except ValueError as e:
        raise UsageError(str(e))
    return rows, True, seed


def cmd_purity(args):
    try:
        with open(args.tensor) as fh:
            t = Tensor.from_json(fh.read())
    except (OSError, KeyError, ValueError) as e:
        raise UsageError("cannot read tensor: %s" % e)
    rng = None
    seed = None
    if t.N ** t.K > EXHAUSTIVE_LIMIT:
        seed = _resolve_seed(args)
        rng = np.random.default_rng(seed)
    res = segre_residual(t, rng)
    pure = res < args.tol and abs(t.norm - 1) < args.tol
    check = {"name": "purity", "N": t.N, "K": t.K, "segre_residual": res, "norm": t.norm,
             "exhaustive": t.N ** t.K <= EXHAUSTIVE_LIMIT, "tolerance": args.tol, "pure_unit": pure}
    if pure and args.factorize:
        vs = factorize(t, args.tol)
        check["factors"] = [[[float(c.real), float(c.imag)] for c in v] for v in vs]
        check["roundtrip_error"] = float(np.abs(tensor_of(vs).data - t.data).max())
    return [check], pure, seed


def cmd_irrep(args):
    _positive(args, "N", "K", "tol")
    phases = None
    if args.phases:
        try:
            angles = [float(a) for a in args.phases.split(",")]
        except ValueError:
            raise UsageError("--phases must be comma-separated angles in radians")
        phases = np.exp(1j * np.array(angles))
    try:
        x = irrep_point(args.N, args.K, phases)
    except ValueError as e:
        raise UsageError(str(e))
    mats = [eval_word((letter(i),), x) for i in range(1, args.N + 1)]
    dim = commutant_dimension(mats, args.tol)
    check = {"name": "commutant_dimension", "N": args.N, "K": args.K, "dimension": dim,
             "point": np.stack([x.vectors.real, x.vectors.imag], -1).tolist(),
             "phases": [[float(p.real), float(p.imag)] for p in x.vectors[:, 1] * np.sqrt(args.N)]}
    return [check], dim == 1, None


def _partition_arg(args):
    if args.preset and args.partition:
        raise UsageError("give either --preset or --partition")
    if args.preset:
        return preset(args.preset, args.K)
    if args.partition:
        try:
            return parse_partition(args.partition)
        except (ValueError, IndexError) as e:
            raise UsageError("bad partition: %s" % e)
    raise UsageError("need --preset or --partition")


def cmd_partitions(args):
    _positive(args, "N", "K")
    seed = None
    try:
        if args.action == "closure":
            gens = [preset(g, args.K) if g in PRESETS else parse_partition(g) for g in (args.gen or [])]
            members = closure(gens, args.max_legs)
            check = {"name": "closure", "max_legs": args.max_legs, "size": len(members),
                     "members": [format_partition(p) for p in members]}
            return [check], True, seed
        if args.action == "tmap":
            p = _partition_arg(args)
            T = t_map(p, args.N)
            rows, cols = np.nonzero(T)
            check = {"name": "t_map", "partition": format_partition(p), "N": args.N, "shape": list(T.shape),
                     "nonzero": [[int(r), int(c)] for r, c in zip(rows, cols)]}
            return [check], True, seed
        if args.action == "intertwine":
            p = _partition_arg(args)
            seed = _resolve_seed(args)
            gs = UnitarySampler(args.N, args.K).draw(args.samples, seed)
            res = intertwiner_residual(p, list(gs))
            check = {"name": "intertwiner_residual", "partition": format_partition(p), "N": args.N, "K": args.K,
                     "samples": args.samples, "residual": res, "tolerance": args.tol}
            return [check], res < args.tol, seed
        if args.action == "pairings":
            ps = enumerate_pairings(args.upper or "", args.lower or "", not args.all, args.noncrossing)
            check = {"name": "pairings", "upper": args.upper or "", "lower": args.lower or "",
                     "matching_only": not args.all, "noncrossing_only": args.noncrossing,
                     "count": len(ps), "pairings": [format_partition(p) for p in ps]}
            return [check], True, seed
    except (ValueError, SizeCapExceeded) as e:
        raise UsageError(str(e))
    raise UsageError("unknown action %r" % args.action)


# ---------------------------------------------------------------------------


def _add_seed(p):
    p.add_argument("--seed", type=int, help="master seed (required for randomized runs)")
    p.add_argument("--random-seed", action="store_true", help="draw a fresh seed and record it in the report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halflib", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version="halflib " + __version__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check relation presets and identity packs on a matrix model")
    v.add_argument("--space", required=True, choices=SPACE_IDS)
    v.add_argument("--N", type=int, default=2)
    v.add_argument("--K", type=int, default=1)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--word-length-bound", type=int)
    v.add_argument("--against-model", choices=MODELS,
                   help="sampler to evaluate on (default: unk_quantum_group for quantum spaces, else k_half_sphere)")
    v.add_argument("--packs", help="comma-separated identity packs: " + ", ".join(IDENTITY_PACKS))
    v.add_argument("--output")
    _add_seed(v)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("moments", help="Monte Carlo moments of words")
    m.add_argument("--space", default="k_half_sphere", choices=SPACE_IDS + ("diagonal",))
    m.add_argument("--N", type=int, default=2)
    m.add_argument("--K", type=int, default=1)
    m.add_argument("--samples", type=int, default=10_000)
    m.add_argument("--word", action="append", help="word or polynomial, e.g. 'z1 z1*' (repeatable)")
    m.add_argument("--words", help="file with one word per line")
    m.add_argument("--format", choices=("json", "csv"), default="json")
    m.add_argument("--output")
    _add_seed(m)
    m.set_defaults(func=cmd_moments)

    p = sub.add_parser("purity", help="test whether a tensor is a unit pure tensor")
    p.add_argument("--tensor", required=True, help="JSON file {N, K, data: [[re, im], ...]}")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--factorize", action="store_true")
    p.add_argument("--output")
    _add_seed(p)
    p.set_defaults(func=cmd_purity)

    i = sub.add_parser("irrep", help="commutant dimension of the model at a point with distinct phases")
    i.add_argument("--N", type=int, default=2)
    i.add_argument("--K", type=int, default=2)
    i.add_argument("--phases", help="comma-separated angles (radians), one per factor")
    i.add_argument("--tol", type=float, default=1e-9)
    i.add_argument("--output")
    i.set_defaults(func=cmd_irrep)

    q = sub.add_parser("partitions", help="colored partition computations")
    q.add_argument("action", choices=("closure", "tmap", "intertwine", "pairings"))
    q.add_argument("--preset", choices=PRESETS)
    q.add_argument("--partition", help="e.g. 'wb / wb ; u1 d1 ; u2 d2'")
    q.add_argument("--gen", action="append", help="closure generator: preset name or partition text")
    q.add_argument("--max-legs", type=int, default=4)
    q.add_argument("--N", type=int, default=2)
    q.add_argument("--K", type=int, default=2)
    q.add_argument("--samples", type=int, default=20)
    q.add_argument("--tol", type=float, default=1e-9)
    q.add_argument("--upper", help="upper colors, e.g. wbwb")
    q.add_argument("--lower", help="lower colors")
    q.add_argument("--noncrossing", action="store_true")
    q.add_argument("--all", action="store_true", help="do not filter by color matching")
    q.add_argument("--output")
    _add_seed(q)
    q.set_defaults(func=cmd_partitions)
    return ap


def _write(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    started = time.perf_counter()
    try:
        checks, passed, seed = args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print("halflib: error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    if args.command == "moments":
        if args.format == "csv":
            text = table_to_csv(checks)
        else:
            env = _envelope(args, seed, json.loads(table_to_json(checks))["rows"], passed, started)
            env["moments_schema"] = json.loads(table_to_json([]))["schema"]
            text = json.dumps(env, indent=2) + "\n"
    else:
        text = json.dumps(_envelope(args, seed, checks, passed, started), indent=2) + "\n"
    _write(text, args.output)
    print("%s: %s" % (args.command, "PASS" if passed else "FAIL"), file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
