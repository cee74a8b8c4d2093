"""Parameter-sweep benchmark harness.

For every lower-diagonal (group size, pipeline depth) cell and branch mode,
a program is generated and timed over batches of point reconstructions.
Throughput statistics are collected per batch (single evaluations are too
fast for the wall clock), and the records are emitted as CSV plus an
optional gnuplot-style matrix.  Absolute numbers are hardware- and
interpreter-specific; the harness asserts structure, never speed.

The default backend times the batch interpreter.  When a clang toolchain is
available, `backend="external"` compiles the emitted assembly to a shared
object and times real native calls instead.
"""

from __future__ import annotations

import ctypes
import io
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codegen import GenConfig, generate
from .emit import emit_text
from .ir import DataVolume, IrProgram, interpret_batch
from .model import SplineSpace
from .oracle import reference_eval_batch
from .schedule import BRANCH_MODES, ScheduleParams

CSV_HEADER = "spline,m,d,branch_mode,backend,trials,mean_recon_per_sec,variance"

INTERPRETER = "interpreter"
EXTERNAL = "external"


class ToolchainError(RuntimeError):
    """No usable native toolchain for the external backend."""


@dataclass(frozen=True)
class BenchRecord:
    spline: str
    m: int
    d: int
    branch_mode: str
    backend: str
    trials: int
    mean_recon_per_sec: float
    variance: float


def make_volume(space: SplineSpace, extents, seed: int, float_width: str = "f64") -> DataVolume:
    """Seeded uniform [0, 1) samples, one array per lattice coset."""
    extents = tuple(int(e) for e in extents)
    if len(extents) != space.dim:
        raise ValueError(f"expected {space.dim} extents")
    if any(e < 1 for e in extents):
        raise ValueError("extents must be positive")
    rng = np.random.default_rng(seed)
    dtype = np.float64 if float_width == "f64" else np.float32
    arrays = [rng.random(extents).astype(dtype) for _ in range(space.ncosets)]
    return DataVolume(arrays)


def sample_points(space: SplineSpace, data: DataVolume, count: int, seed: int) -> np.ndarray:
    """Seeded uniform points inside the volume's periodic box."""
    rng = np.random.default_rng(seed)
    spans = np.array(data.extents[0], dtype=np.float64)
    return rng.random((count, space.dim)) * spans


def default_grid(n: int) -> list[tuple[int, int]]:
    """All (group size, pipeline depth) pairs with m <= d <= n."""
    return [(m, d) for m in range(1, n + 1) for d in range(m, n + 1)]


def run_sweep(
    space: SplineSpace,
    data: DataVolume,
    grid: list[tuple[int, int]] | None = None,
    modes: tuple[str, ...] = BRANCH_MODES,
    trials: int = 100_000,
    seed: int = 0,
    batch_size: int = 1000,
    refetch_tables: bool = False,
    unroll_cosets: bool = True,
    float_width: str = "f64",
    backend: str = INTERPRETER,
    oracle_check: int = 32,
) -> list[BenchRecord]:
    """Time every grid cell and mode; one record per combination.

    After timing, `oracle_check` points from each cell are compared against
    the reference evaluator (0 disables the check), so a sweep cannot
    silently measure a miscompiled kernel.
    """
    if grid is None:
        grid = default_grid(space.stencil_size)
    for m, d in grid:
        if d < m:
            raise ValueError(f"grid cell ({m}, {d}) violates depth >= group size")
    points = sample_points(space, data, min(trials, batch_size), seed)
    check_tol = 1e-9 if float_width == "f64" else 1e-3
    records = []
    for m, d in sorted(grid):
        for mode in modes:
            cfg = GenConfig(
                params=ScheduleParams(m, d, branch_mode=mode, refetch_tables=refetch_tables),
                float_width=float_width,
                unroll_cosets=unroll_cosets,
            )
            prog = generate(space, cfg)
            if backend == EXTERNAL:
                runner = _external_runner(prog, data)
            elif backend == INTERPRETER:
                def runner(pts, prog=prog):
                    return interpret_batch(prog, pts, data)
            else:
                raise ValueError(f"unknown backend {backend!r}")
            mean, variance = _time_cell(runner, points, trials, batch_size)
            if oracle_check:
                sample = points[: min(len(points), oracle_check)]
                got = np.asarray(runner(sample), dtype=np.float64)
                want = reference_eval_batch(space, sample, data)
                err = np.abs(got - want)
                bound = 1e-12 + check_tol * np.maximum(np.abs(got), np.abs(want))
                if not (err <= bound).all():
                    raise AssertionError(
                        f"cell m={m} d={d} {mode}: generated code disagrees with "
                        f"the reference by {float(err.max()):.3e}"
                    )
            records.append(
                BenchRecord(
                    spline=space.name,
                    m=m,
                    d=d,
                    branch_mode=mode,
                    backend=backend,
                    trials=trials,
                    mean_recon_per_sec=mean,
                    variance=variance,
                )
            )
    return records


def _time_cell(runner, points: np.ndarray, trials: int, batch_size: int):
    runner(points[: min(len(points), 64)])  # warm-up pass, excluded from timing
    throughputs = []
    remaining = trials
    while remaining > 0:
        size = min(remaining, batch_size)
        batch = points[:size]
        start = time.perf_counter()
        runner(batch)
        elapsed = time.perf_counter() - start
        throughputs.append(size / max(elapsed, 1e-12))
        remaining -= size
    arr = np.array(throughputs)
    return float(arr.mean()), float(arr.var())


# -- CSV and matrix output -------------------------------------------------------------


def emit_csv(records: list[BenchRecord]) -> str:
    """Deterministic CSV, ordered by (m, d, branch mode)."""
    lines = [CSV_HEADER]
    for r in sorted(records, key=lambda r: (r.m, r.d, r.branch_mode, r.backend)):
        lines.append(
            f"{r.spline},{r.m},{r.d},{r.branch_mode},{r.backend},{r.trials},"
            f"{r.mean_recon_per_sec!r},{r.variance!r}"
        )
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[BenchRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or malformed CSV header")
    records = []
    for ln in lines[1:]:
        spline, m, d, mode, backend, trials, mean, var = ln.split(",")
        records.append(
            BenchRecord(spline, int(m), int(d), mode, backend, int(trials),
                        float(mean), float(var))
        )
    return records


def emit_matrix(records: list[BenchRecord], branch_mode: str,
                field: str = "mean_recon_per_sec") -> str:
    """Gnuplot-style matrix: group size along x, pipeline depth along y.

    Cells below the diagonal (d < m) are blank, matching the lower-diagonal
    sweep plots.
    """
    cells = {(r.m, r.d): getattr(r, field) for r in records if r.branch_mode == branch_mode}
    if not cells:
        return ""
    mmax = max(m for m, _ in cells)
    dmax = max(d for _, d in cells)
    out = io.StringIO()
    for d in range(1, dmax + 1):
        row = []
        for m in range(1, mmax + 1):
            value = cells.get((m, d))
            row.append("" if value is None else repr(value))
        out.write("\t".join(row).rstrip("\t") + "\n")
    return out.getvalue()


# -- optional native backend --------------------------------------------------------------


def compile_external(prog: IrProgram, directory: str | None = None):
    """Compile emitted assembly with clang and return a ctypes function."""
    clang = shutil.which("clang")
    if clang is None:
        raise ToolchainError("clang not found on PATH")
    workdir = Path(directory) if directory else Path(tempfile.mkdtemp(prefix="splinegen-"))
    workdir.mkdir(parents=True, exist_ok=True)
    ll = workdir / "kernel.ll"
    so = workdir / "kernel.so"
    ll.write_text(emit_text(prog))
    proc = subprocess.run(
        [clang, "-O2", "-shared", "-fPIC", "-Wno-override-module", str(ll), "-o", str(so)],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ToolchainError(f"clang failed:\n{proc.stderr}")
    lib = ctypes.CDLL(str(so))
    fn = lib.reconstruct
    scalar = ctypes.c_double if prog.float_width == "f64" else ctypes.c_float
    argtypes = [scalar] * prog.dim
    for _ in range(prog.ncosets):
        argtypes.append(ctypes.POINTER(scalar))
        argtypes += [ctypes.c_int64] * prog.dim
    fn.argtypes = argtypes
    fn.restype = scalar
    return fn


def _external_runner(prog: IrProgram, data: DataVolume):
    fn = compile_external(prog)
    scalar = ctypes.c_double if prog.float_width == "f64" else ctypes.c_float
    held = [np.ascontiguousarray(arr) for arr in data.arrays]  # keep pointers alive
    fixed = []
    for arr in held:
        fixed.append(arr.ctypes.data_as(ctypes.POINTER(scalar)))
        fixed += [ctypes.c_int64(e) for e in arr.shape]

    def runner(points: np.ndarray) -> np.ndarray:
        out = np.empty(len(points))
        for i, row in enumerate(points):
            out[i] = fn(*row, *fixed)
        return out

    runner.arrays = held
    return runner
