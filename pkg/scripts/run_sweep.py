"""Run the full scheduling-parameter sweep over the shipped spline spaces.

Produces one CSV per space plus gnuplot-style matrices (group size along x,
pipeline depth along y, blank cells below the diagonal), mirroring the
lower-diagonal plots used to study these parameters.  Timings come from the
batch interpreter by default; pass --backend external to time clang-compiled
kernels instead (requires clang on PATH).

    python scripts/run_sweep.py --out results/ --trials 100000
"""

from __future__ import annotations

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from splinegen.bench import emit_csv, emit_matrix, make_volume, run_sweep
from splinegen.model import load_fixture
from splinegen.schedule import BRANCH_MODES

SPACES = {
    "linear1d": (64,),
    "halfgrid1d": (64,),
    "zp": (64, 64),
    "zp_k2": (64, 64),
    "trilinear": (64, 64, 64),
    "trilinear_voronoi": (32, 32, 32),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--batch", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--backend", choices=("interpreter", "external"), default="interpreter")
    ap.add_argument("--spaces", nargs="*", default=list(SPACES))
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.spaces:
        extents = SPACES[name]
        space = load_fixture(name)
        volume = make_volume(space, extents, seed=args.seed)
        print(f"{name}: sweeping {space.stencil_size}-site stencil over "
              f"{extents} volume ({args.backend}) ...", flush=True)
        records = run_sweep(
            space,
            volume,
            trials=args.trials,
            seed=args.seed,
            batch_size=args.batch,
            backend=args.backend,
        )
        (out / f"{name}.csv").write_text(emit_csv(records))
        for mode in BRANCH_MODES:
            matrix = emit_matrix(records, mode)
            if matrix:
                (out / f"{name}.{mode}.matrix").write_text(matrix)
        best = max(records, key=lambda r: r.mean_recon_per_sec)
        print(f"  best cell: m={best.m} d={best.d} {best.branch_mode} "
              f"({best.mean_recon_per_sec:.3e} recon/s)")
    print(f"results in {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
