"""Command-line entry point: subdivide, stats, predict, bench, generate.

Exit status: 0 on success, 1 on input or configuration errors, 2 when an
internal invariant is violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .corpus import SHAPES, CorpusSpec, generate_corpus
from .errors import InvariantError, MeshError
from .mesh import weld_vertices
from .mesh_io import format_from_name, read_mesh, write_mesh, write_report
from .metrics import build_report, vertex_b_values
from .subdivision import SubdivisionConfig, check_max_edge, predict_classic_count, subdivide

log = logging.getLogger("meshrefine")

METHOD_CHOICES = ("classic", "novel", "multistage", "angle-restricted")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_input(p, required=True):
    p.add_argument("-i", "--input", required=required, help="input mesh (STL binary/ASCII or OBJ)")
    p.add_argument("--weld-tolerance", type=float, default=None,
                   help="vertex weld distance (default 1e-9 x bounding-box diagonal)")


def _add_limit(p):
    p.add_argument("--max-edge", type=float, required=True, help="edge-length limit")
    p.add_argument("--relative", action="store_true", help="--max-edge is a fraction of the bounding-box diagonal")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="meshrefine", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("subdivide", help="refine a mesh until no edge exceeds the limit")
    _add_input(p)
    _add_limit(p)
    p.add_argument("--method", choices=METHOD_CHOICES, default="novel")
    p.add_argument("--initial-limit", type=float, help="multistage: first-stage limit (default 4 x --max-edge)")
    p.add_argument("--fold-factor", type=float, help="multistage: limit divisor between stages (default 2)")
    p.add_argument("--angle-threshold", type=float, help="angle-restricted: threshold in degrees (default 30)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("stl", "stl-ascii", "obj"), help="output format (default from suffix)")
    p.add_argument("--report", help="write a quality report (.json or .csv)")
    p.add_argument("--timing", action="store_true", help="record wall-clock time in the report")

    p = sub.add_parser("stats", help="quality report of an existing mesh")
    _add_input(p)
    _add_limit(p)
    p.add_argument("--report", help="write here instead of stdout (.json or .csv)")
    p.add_argument("--b-values", help="write per-vertex b values (one per line)")

    p = sub.add_parser("predict", help="classic-method triangle counts from edge lengths")
    _add_input(p)
    _add_limit(p)

    p = sub.add_parser("bench", help="run a method sweep")
    p.add_argument("--sweep", help="sweep config JSON (default: built-in sweep)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--table-one", action="store_true",
                   help="also run the eight-row comparison on the stretched panel")

    p = sub.add_parser("generate", help="write a synthetic corpus mesh")
    p.add_argument("--shape", choices=SHAPES, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--aspect", type=float, default=20.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("stl", "stl-ascii", "obj"))
    return parser


def _reject_unknown_flags(parser, argv):
    # argparse reports missing required flags before unknown ones; name the unknown one first
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((t for t in argv if t in sub.choices), None)
    known = set(parser._option_string_actions)
    if command is not None:
        known |= set(sub.choices[command]._option_string_actions)
    unknown = [t for t in argv if t.startswith("-") and len(t) > 1 and not _is_number(t)
               and t.split("=", 1)[0] not in known]
    if unknown:
        raise UsageError(f"unrecognized arguments: {' '.join(unknown)}")


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _validate(args):
    if args.command != "subdivide":
        return
    if args.fold_factor is not None and args.method != "multistage":
        raise UsageError("fold-factor requires --method multistage")
    if args.initial_limit is not None and args.method != "multistage":
        raise UsageError("initial-limit requires --method multistage")
    if args.angle_threshold is not None and args.method != "angle-restricted":
        raise UsageError("angle-threshold requires --method angle-restricted")


def _load(args):
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"cannot read input file {path}")
    mesh, dropped = weld_vertices(read_mesh(path), args.weld_tolerance)
    if dropped:
        log.warning("welding dropped %d collapsed triangle(s)", dropped)
    return mesh


def _limit(args, mesh):
    if not args.max_edge > 0:
        raise UsageError(f"max-edge must be positive, got {args.max_edge}")
    return args.max_edge * mesh.bbox_diagonal() if args.relative else args.max_edge


def _out_format(args):
    return format_from_name(args.format) if args.format else format_from_name(args.output)


def cmd_subdivide(args):
    mesh = _load(args)
    limit = _limit(args, mesh)
    method = args.method.replace("-", "_")
    config = SubdivisionConfig(
        method,
        limit,
        L_0=args.initial_limit,
        fold_factor=args.fold_factor if args.fold_factor is not None else 2.0,
        theta_0=args.angle_threshold if args.angle_threshold is not None else 30.0,
    )
    outcome = subdivide(mesh, config)
    if outcome.degenerate:
        log.warning("%d degenerate triangle(s) passed through unrefined", outcome.degenerate)
    else:
        check_max_edge(outcome.mesh, limit)
    write_mesh(outcome.mesh, args.output, _out_format(args))
    if args.report:
        report = build_report(
            outcome.mesh,
            limit,
            outcome.elapsed if args.timing else None,
            args.method,
            created_total=outcome.triangles_created_total,
            stack_high_water=outcome.stack_high_water,
        )
        write_report(report, args.report)
    print(f"{outcome.final_triangles} triangles, {outcome.new_vertices} new vertices")


def cmd_stats(args):
    mesh = _load(args)
    limit = _limit(args, mesh)
    report = build_report(mesh, limit, None, "input")
    text = write_report(report, args.report)
    if not args.report:
        sys.stdout.write(text)
    if args.b_values:
        Path(args.b_values).write_text("".join(f"{b!r}\n" for b in vertex_b_values(mesh, limit)))


def cmd_predict(args):
    mesh = _load(args)
    pred = predict_classic_count(mesh, _limit(args, mesh))
    print(f"N_total {pred.n_total}")
    print(f"N_leaves {pred.n_leaves}")


def cmd_bench(args):
    if args.sweep:
        if not Path(args.sweep).is_file():
            raise UsageError(f"cannot read sweep file {args.sweep}")
        entries = bench.load_bench_config(args.sweep)
    else:
        entries = bench.default_bench()
    results = bench.run_bench(entries, args.output)
    for name, res in results.items():
        print(f"{name}: {len(res.reports)} cells, {len(res.failures)} failed")
    if args.table_one:
        panel = generate_corpus(CorpusSpec("stretched_panel", count=200, aspect=20, seed=7))
        table = bench.table_one_experiment(panel, 0.01)
        bench.write_table_one(table, args.output)
        for claim, held in table.orderings.items():
            print(f"{'held  ' if held else 'FAILED'} {claim}")


def cmd_generate(args):
    spec = CorpusSpec(args.shape, radius=args.radius, level=args.level, aspect=args.aspect,
                      count=args.count, seed=args.seed)
    mesh = generate_corpus(spec)
    write_mesh(mesh, args.output, _out_format(args))
    print(f"{spec.name}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles")


COMMANDS = {
    "subdivide": cmd_subdivide,
    "stats": cmd_stats,
    "predict": cmd_predict,
    "bench": cmd_bench,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        _reject_unknown_flags(parser, argv)
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as exc:
        print(f"meshrefine: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except InvariantError as exc:
        print(f"meshrefine: internal error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"meshrefine: error: {exc}", file=sys.stderr)
        return 1
    except (MeshError, OSError, json.JSONDecodeError) as exc:
        print(f"meshrefine: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
