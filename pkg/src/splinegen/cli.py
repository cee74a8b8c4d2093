"""Command line surface: validate, codegen, eval and bench.

Exit codes: 0 success, 1 operational failure (invalid space, bad flag
combination, failed check), 2 unreadable input file.  Everything is
scriptable; there are no interactive prompts.  The SPLINEGEN_SEED
environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import oracle
from .codegen import GenConfig, generate
from .emit import emit_text, manifest_text
from .ir import DataVolume, interpret
from .model import InvariantError, SchemaError, parse_space, validate_space
from .schedule import BRANCH_MODES, ScheduleParams


def _default_seed() -> int:
    try:
        return int(os.environ.get("SPLINEGEN_SEED", "0"))
    except ValueError:
        return 0


def _read_space(path: str):
    """Returns (space, exit_code, message); space is None on failure."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        return None, 2, f"cannot read {path}: {e}"
    try:
        return parse_space(text), 0, ""
    except (SchemaError, InvariantError) as e:
        return None, 1, str(e)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--group-size", "-m", type=int, default=1)
    p.add_argument("--pipeline-depth", "-d", type=int, default=None,
                   help="defaults to the stencil size")
    p.add_argument("--branch-mode", choices=BRANCH_MODES, default="predicated")
    p.add_argument("--float-width", choices=("f64", "f32"), default="f64")
    p.add_argument("--refetch-tables", action="store_true")
    p.add_argument("--unroll-cosets", dest="unroll_cosets", action="store_true", default=True)
    p.add_argument("--no-unroll-cosets", dest="unroll_cosets", action="store_false")


def _config_from_args(args, space) -> GenConfig:
    depth = args.pipeline_depth if args.pipeline_depth is not None else space.stencil_size
    params = ScheduleParams(
        group_size=args.group_size,
        pipeline_depth=depth,
        branch_mode=args.branch_mode,
        refetch_tables=args.refetch_tables,
    )
    return GenConfig(params=params, float_width=args.float_width,
                     unroll_cosets=args.unroll_cosets)


def _parse_extents(text: str, dim: int) -> tuple[int, ...]:
    parts = [int(v) for v in text.split(",") if v]
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise ValueError(f"expected 1 or {dim} extents, got {len(parts)}")
    return tuple(parts)


def _make_data(args, space) -> DataVolume:
    extents = _parse_extents(args.extents, space.dim)
    if args.data == "ones":
        arrays = [np.ones(extents) for _ in range(space.ncosets)]
        return DataVolume(arrays)
    return bench_mod.make_volume(space, extents, args.seed)


# -- subcommands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        text = Path(args.path).read_text()
    except OSError as e:
        print(f"error: cannot read {args.path}: {e}", file=sys.stderr)
        return 2
    try:
        space = parse_space(text)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InvariantError as e:
        for d in e.diagnostics:
            print(str(d), file=sys.stderr)
        return 1
    diagnostics = validate_space(space)
    for d in diagnostics:
        print(str(d), file=sys.stderr)
    if any(d.severity == "error" for d in diagnostics):
        return 1
    print(f"{space.name}: ok ({space.dim}D, {space.nsubregions} sub-regions, "
          f"{space.stencil_size}-site stencil, {space.nref} reference polynomials)")
    return 0


def cmd_codegen(args) -> int:
    space, code, message = _read_space(args.path)
    if space is None:
        print(f"error: {message}", file=sys.stderr)
        return code
    try:
        config = _config_from_args(args, space)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    prog = generate(space, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(emit_text(prog))
    manifest = out.with_suffix(".manifest.json")
    manifest.write_text(manifest_text(prog))
    print(f"wrote {out} and {manifest}")
    return 0


def cmd_eval(args) -> int:
    space, code, message = _read_space(args.path)
    if space is None:
        print(f"error: {message}", file=sys.stderr)
        return code
    try:
        point = tuple(float(v) for v in args.point.split(","))
    except ValueError:
        print(f"error: cannot parse point {args.point!r}", file=sys.stderr)
        return 1
    if len(point) != space.dim:
        print(f"error: point has {len(point)} coordinates, space is {space.dim}D",
              file=sys.stderr)
        return 1
    try:
        config = _config_from_args(args, space)
        data = _make_data(args, space)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    prog = generate(space, config)
    value = interpret(prog, point, data)
    print(f"{value!r}")
    if args.check:
        ref = oracle.reference_eval(space, point, data)
        conv = oracle.convolution_eval(space, point, data)
        print(f"reference   {ref!r} (delta {value - ref:+.3e})")
        print(f"convolution {conv!r} (delta {value - conv:+.3e})")
        scale = max(abs(value), abs(ref), abs(conv), 1.0)
        if abs(value - ref) > 1e-9 * scale or abs(value - conv) > 1e-9 * scale:
            print("error: oracle disagreement beyond 1e-9", file=sys.stderr)
            return 1
    return 0


def _parse_grid(text: str, n: int):
    if text == "auto":
        return bench_mod.default_grid(n)
    cells = []
    for piece in text.split(";"):
        piece = piece.strip()
        if not piece:
            continue
        m, d = piece.split(",")
        cells.append((int(m), int(d)))
    return cells


def cmd_bench(args) -> int:
    space, code, message = _read_space(args.path)
    if space is None:
        print(f"error: {message}", file=sys.stderr)
        return code
    try:
        grid = _parse_grid(args.grid, space.stencil_size)
        extents = _parse_extents(args.extents, space.dim)
        data = bench_mod.make_volume(space, extents, args.seed)
        modes = BRANCH_MODES if args.modes == "both" else (args.modes,)
        records = bench_mod.run_sweep(
            space,
            data,
            grid=grid,
            modes=modes,
            trials=args.trials,
            seed=args.seed,
            batch_size=args.batch,
            backend=args.backend,
        )
    except (ValueError, bench_mod.ToolchainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    csv = bench_mod.emit_csv(records)
    if args.csv_out:
        Path(args.csv_out).write_text(csv)
        print(f"wrote {args.csv_out} ({len(records)} records)")
    else:
        sys.stdout.write(csv)
    if args.matrix_out:
        for mode in modes:
            path = Path(args.matrix_out.format(mode=mode))
            path.write_text(bench_mod.emit_matrix(records, mode))
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinegen",
        description="Generate, run and benchmark spline reconstruction kernels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a space description file")
    p.add_argument("path")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("codegen", help="emit a .ll kernel plus manifest")
    p.add_argument("path")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_codegen)

    p = sub.add_parser("eval", help="evaluate the reconstruction at a point")
    p.add_argument("path")
    p.add_argument("--point", required=True, help="comma separated coordinates")
    p.add_argument("--data", choices=("ones", "random"), default="ones")
    p.add_argument("--extents", default="8")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--check", action="store_true",
                   help="also run both oracles and verify agreement")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="run the (m, d, mode) parameter sweep")
    p.add_argument("path")
    p.add_argument("--grid", default="auto", help='"auto" or "m,d;m,d;..."')
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--batch", type=int, default=1000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--extents", default="64")
    p.add_argument("--modes", choices=("both",) + BRANCH_MODES, default="both")
    p.add_argument("--backend", choices=(bench_mod.INTERPRETER, bench_mod.EXTERNAL),
                   default=bench_mod.INTERPRETER)
    p.add_argument("--csv-out", default=None)
    p.add_argument("--matrix-out", default=None,
                   help="optional gnuplot matrix path; {mode} is substituted")
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
