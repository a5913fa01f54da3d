"""Command-line interface.

Exit codes: 0 success, 2 validation failure (bad input, non-dissipative
reducer, rejected split, schema mismatch), 3 internal invariant violation.

Manifests are key-value text, one ``key = value`` per line; ``argv`` holds the
JSON-encoded argument list that reproduces the run.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .catalog import CatalogError, get_entry, load_catalog
from .escape import EstimateError, fit_displacement_exponent, lil_statistic, stat_matrix, tail_profile
from .group import (
    BallCapError,
    BallMemoryError,
    ball,
    evaluate_word,
    length_upper_bound,
    sol_trace_word,
    sphere_profile,
)
from .laurent import LaurentPoly, PolyParseError, edp_check, parse_poly
from .spectral import SplitRejected, NearDefectiveError, char_poly, verify_split
from .toppling import NonEdpReducerError, ToppleCapExceeded, reduce_poly, verify_membership
from .walk import (
    CsvSchemaError,
    InvariantViolation,
    MODES,
    WalkConfig,
    read_csv,
    run_ensemble,
    write_csv,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INTERNAL = 3


class ValidationError(Exception):
    pass


def _out(line: str = "") -> None:
    print(line)


def _poly(text: str) -> LaurentPoly:
    try:
        return parse_poly(text)
    except PolyParseError as exc:
        raise ValidationError(str(exc)) from exc


def cmd_edp(args) -> int:
    p = _poly(args.poly)
    if not p:
        raise ValidationError("the zero polynomial has no dissipation verdict")
    r = edp_check(p)
    _out(f"poly = {p}")
    _out(f"holds = {str(r.holds).lower()}")
    _out(f"y0 = {r.y0}")
    _out(f"i0 = {r.i0}")
    _out(f"delta = {r.delta}")
    _out(f"r = {r.r}")
    _out(f"contraction = {r.contraction}")
    return EXIT_OK


def cmd_topple(args) -> int:
    y = _poly(args.reducer)
    P = _poly(args.input)
    try:
        rep = reduce_poly(P, y)
    except NonEdpReducerError as exc:
        raise ValidationError(str(exc)) from exc
    ok = verify_membership(rep)
    _out(f"input = {rep.input}")
    _out(f"reducer = {rep.reducer}")
    _out(f"Q = {rep.Q}")
    _out(f"cofactor = {rep.cofactor}")
    _out(f"topples = {rep.topples}")
    _out(f"passes = {rep.passes}")
    _out(f"final_K = {rep.final_K}")
    _out(f"final_d = {rep.final_d}")
    _out(f"height_bound = {rep.height_bound}")
    _out(f"verified = {str(ok).lower()}")
    if not ok:
        print("error: membership certificate failed", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def _entry(args):
    try:
        return get_entry(args.group, args.catalog)
    except CatalogError as exc:
        raise ValidationError(str(exc)) from exc


def cmd_ball(args) -> int:
    entry = _entry(args)
    try:
        lengths = ball(entry.spec, args.radius, cap=args.cap)
    except (BallCapError, BallMemoryError) as exc:
        raise ValidationError(str(exc)) from exc
    profile = sphere_profile(lengths, args.radius)
    sizes = [0] * (args.radius + 1)
    for r in lengths.values():
        sizes[r] += 1
    _out(f"group = {entry.name}")
    _out("radius,sphere,ball,max_kernel_norm")
    total = 0
    for r in range(args.radius + 1):
        total += sizes[r]
        _out(f"{r},{sizes[r]},{total},{profile[r]}")
    return EXIT_OK


def cmd_catalog(args) -> int:
    try:
        cat = load_catalog(args.catalog)
    except CatalogError as exc:
        raise ValidationError(str(exc)) from exc
    if args.action == "list":
        for name, e in cat.items():
            _out(f"{name}\tD={e.spec.dim}\tm={e.spec.modulus}\t{e.spec.description}")
        return EXIT_OK
    if args.name not in cat:
        raise ValidationError(f"unknown group {args.name!r}")
    e = cat[args.name]
    _out(f"name = {e.name}")
    _out(f"D = {e.spec.dim}")
    _out(f"m = {e.spec.modulus}")
    _out(f"phi = {[[str(x) for x in row] for row in e.spec.phi]}")
    _out(f"generators = {[[str(x) for x in w] for w in e.spec.kernel_gens]}")
    _out(f"char_poly = {char_poly(e.spec.phi)}")
    _out(f"reducer = {e.reducer if e.reducer is not None else '-'}")
    if e.split is not None:
        _out(f"split = ({e.split[0]})*({e.split[1]})")
    else:
        _out("split = -")
    if e.spec.description:
        _out(f"description = {e.spec.description}")
    return EXIT_OK


def cmd_trace_word(args) -> int:
    entry = _entry(args)
    spec = entry.spec
    try:
        word = sol_trace_word(spec, args.index, args.k)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    g = evaluate_word(spec, word)
    _out(f"word = {spec.format_word(word)}")
    _out(f"length = {len(word)}")
    _out(f"element = ({', '.join(str(x) for x in g.a)}; {g.k})")
    reducer = _poly(args.reducer) if args.reducer else entry.reducer
    if reducer is not None:
        bound, witness = length_upper_bound(spec, g, reducer)
        if evaluate_word(spec, witness) != g:
            raise InvariantViolation("upper-bound witness does not evaluate to the element")
        _out(f"upper_bound = {bound}")
        _out(f"witness = {spec.format_word(witness)}")
    return EXIT_OK


def _resolve_split(args, entry, required: bool):
    if args.p_plus or args.p_zero:
        if not (args.p_plus and args.p_zero):
            raise ValidationError("--p-plus and --p-zero must be given together")
        pair = (_poly(args.p_plus), _poly(args.p_zero))
    elif entry.split is not None:
        pair = entry.split
    else:
        if required:
            raise ValidationError(f"{entry.name}: refused, no verified integer split is available")
        return None
    try:
        return verify_split(char_poly(entry.spec.phi), pair[0], pair[1], phi=entry.spec.phi)
    except (SplitRejected, NearDefectiveError) as exc:
        if required:
            raise ValidationError(f"{entry.name}: refused, {exc}") from exc
        return None


def build_config(args) -> WalkConfig:
    entry = _entry(args)
    mode = args.mode or ("full_edp" if entry.reducer is not None else "none")
    reducer = _poly(args.reducer) if args.reducer else entry.reducer
    split = _resolve_split(args, entry, required=(mode == "split_plus"))
    try:
        return WalkConfig(entry.spec, args.steps, trials=args.trials, seed=args.seed, mode=mode,
                          reducer=reducer, split=split)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _manifest_lines(d: dict, prefix: str = "") -> list[str]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out += _manifest_lines(v, key + ".")
        else:
            out.append(f"{key} = {json.dumps(v)}")
    return out


def write_manifest(path: Path, fields: dict) -> None:
    path.write_text("\n".join(_manifest_lines(fields)) + "\n")


def read_manifest(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, val = line.partition(" = ")
        if not sep:
            raise ValidationError(f"{path}:{n}: expected 'key = value'")
        out[key.strip()] = json.loads(val)
    return out


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".manifest")


def cmd_simulate(args, argv: list[str]) -> int:
    config = build_config(args)
    out = Path(args.out)
    t0 = time.perf_counter()
    ens = run_ensemble(config, workers=args.workers)
    rows = write_csv(ens, out)
    elapsed = time.perf_counter() - t0
    man = manifest_path(out)
    fields = {
        "command": "simulate",
        "group": config.spec.name,
        "seed": config.seed,
        "version": __version__,
        "duration_s": round(elapsed, 3),
        "rows": rows,
        "outputs": [str(out), str(man)],
        "config": config.describe(),
        "argv": argv,
    }
    if config.split is not None:
        fields["split_accepted"] = f"({config.split.p_plus})*({config.split.p_zero})"
    write_manifest(man, fields)
    _out(f"rows = {rows}")
    _out(f"csv = {out}")
    _out(f"manifest = {man}")
    _out(f"duration_s = {elapsed:.3f}")
    return EXIT_OK


def cmd_replay(args) -> int:
    fields = read_manifest(args.manifest)
    argv = fields.get("argv")
    if not argv or argv[0] != "simulate":
        raise ValidationError(f"{args.manifest}: not a simulate manifest")
    if args.out:
        argv = _replace_out(argv, args.out)
    return main(argv)


def _replace_out(argv: list[str], out: str) -> list[str]:
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res + ["--out", out]


def cmd_estimate(args) -> int:
    try:
        table = read_csv(args.csv)
        values = stat_matrix(table, args.stat)
    except (CsvSchemaError, EstimateError) as exc:
        raise ValidationError(str(exc)) from exc
    ns = table.checkpoints
    try:
        fit = fit_displacement_exponent(ns, values, n_boot=args.bootstrap, seed=args.bootstrap_seed)
    except EstimateError as exc:
        raise ValidationError(str(exc)) from exc
    _out(f"stat = {args.stat}")
    _out(f"trials = {len(table.trials)}")
    for line in fit.lines("fit"):
        _out(line)
    if len(table.trials) >= 100:
        tail = tail_profile(ns, values, args.checkpoint)
        for line in tail.lines("tail"):
            _out(line)
        if args.tail_csv:
            tail.write_csv(args.tail_csv)
    else:
        _out("tail = skipped (fewer than 100 trials)")
    if any(n >= 16 for n in ns):
        for line in lil_statistic(ns, values).lines("lil"):
            _out(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abcwalk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edp", help="check the dissipation condition of a polynomial")
    p.add_argument("poly")

    p = sub.add_parser("topple", help="reduce a constant or polynomial by a reducer")
    p.add_argument("input", help="integer K or Laurent polynomial text")
    p.add_argument("--reducer", required=True)

    def group_args(p, required=True):
        p.add_argument("--group", required=required)
        p.add_argument("--catalog", default=None, help="alternative catalog JSON")

    p = sub.add_parser("ball", help="breadth-first ball with kernel-norm profile")
    group_args(p)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--cap", type=int, default=10)

    p = sub.add_parser("simulate", help="run an ensemble and write CSV plus manifest")
    group_args(p)
    p.add_argument("--steps", type=int, default=2**14)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--reducer", default=None)
    p.add_argument("--p-plus", dest="p_plus", default=None)
    p.add_argument("--p-zero", dest="p_zero", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="re-run a simulation from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="write the CSV somewhere else")

    p = sub.add_parser("estimate", help="exponent, tail and LIL estimates from a CSV")
    p.add_argument("csv")
    p.add_argument("--stat", default="U", help="column or sum of columns, e.g. normP+d_P")
    p.add_argument("--checkpoint", type=int, default=None)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--bootstrap-seed", dest="bootstrap_seed", type=int, default=0)
    p.add_argument("--tail-csv", dest="tail_csv", default=None)

    p = sub.add_parser("catalog", help="list or show catalog groups")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    p.add_argument("--catalog", default=None)

    p = sub.add_parser("trace-word", help="trace word for tr(phi^k) e_i and its upper bound")
    group_args(p, required=False)
    p.set_defaults(group="sol")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--index", type=int, default=1)
    p.add_argument("--reducer", default=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "edp":
            return cmd_edp(args)
        if args.command == "topple":
            return cmd_topple(args)
        if args.command == "ball":
            return cmd_ball(args)
        if args.command == "simulate":
            return cmd_simulate(args, argv)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "estimate":
            return cmd_estimate(args)
        if args.command == "catalog":
            if args.action == "show" and not args.name:
                raise ValidationError("catalog show needs a group name")
            return cmd_catalog(args)
        if args.command == "trace-word":
            return cmd_trace_word(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvariantViolation, ToppleCapExceeded) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    ap.error(f"unknown command {args.command!r}")
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
