import numpy as np
import pytest

from splinegen.bench import (
    BenchRecord,
    CSV_HEADER,
    default_grid,
    emit_csv,
    emit_matrix,
    make_volume,
    parse_csv,
    run_sweep,
    sample_points,
)
from splinegen.model import load_fixture

ZP = load_fixture("zp")


def test_make_volume_reproducible():
    a = make_volume(ZP, (16, 16), seed=42)
    b = make_volume(ZP, (16, 16), seed=42)
    assert all(np.array_equal(x, y) for x, y in zip(a.arrays, b.arrays))
    c = make_volume(ZP, (16, 16), seed=43)
    assert not np.array_equal(a.arrays[0], c.arrays[0])


def test_make_volume_extents():
    vol = make_volume(load_fixture("trilinear"), (128, 128, 128), seed=0)
    assert vol.arrays[0].size == 128**3


def test_make_volume_two_cosets():
    vol = make_volume(load_fixture("halfgrid1d"), (32,), seed=0)
    assert vol.ncosets == 2


def test_make_volume_rejects_bad_extents():
    with pytest.raises(ValueError):
        make_volume(ZP, (16,), seed=0)
    with pytest.raises(ValueError):
        make_volume(ZP, (0, 4), seed=0)


def test_default_grid_counts():
    assert len(default_grid(7)) == 28
    assert len(default_grid(2)) == 3
    assert all(d >= m for m, d in default_grid(8))


def test_sample_points_inside_volume():
    vol = make_volume(ZP, (8, 8), seed=1)
    pts = sample_points(ZP, vol, 500, seed=2)
    assert pts.shape == (500, 2)
    assert pts.min() >= 0 and pts.max() < 8


def small_sweep(**kw):
    vol = make_volume(ZP, (8, 8), seed=0)
    defaults = dict(grid=[(1, 1), (1, 2), (2, 2)], trials=200, batch_size=100, seed=0)
    defaults.update(kw)
    return run_sweep(ZP, vol, **defaults)


def test_sweep_record_structure():
    records = small_sweep()
    assert len(records) == 6  # 3 cells x 2 modes
    for r in records:
        assert r.spline == "zp"
        assert r.d >= r.m
        assert r.trials == 200
        assert r.mean_recon_per_sec > 0
        assert r.variance >= 0
        assert r.backend == "interpreter"


def test_sweep_record_count_formula():
    n = ZP.stencil_size
    records = small_sweep(grid=default_grid(n), trials=100, batch_size=100)
    expected = len([(m, d) for m in range(1, n + 1) for d in range(m, n + 1)])
    assert len(records) == expected * 2


def test_single_trial_has_zero_variance():
    records = small_sweep(trials=1, modes=("predicated",))
    assert all(r.variance == 0.0 for r in records)


def test_sweep_rejects_bad_grid():
    vol = make_volume(ZP, (8, 8), seed=0)
    with pytest.raises(ValueError):
        run_sweep(ZP, vol, grid=[(3, 2)], trials=10)


def test_csv_header_and_shape():
    records = small_sweep()
    csv = emit_csv(records)
    lines = csv.strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == len(records) + 1


def test_csv_is_sorted_and_round_trips():
    records = small_sweep()
    csv = emit_csv(records)
    again = parse_csv(csv)
    assert sorted(again, key=lambda r: (r.m, r.d, r.branch_mode)) == again
    assert {(r.m, r.d, r.branch_mode) for r in again} == {
        (r.m, r.d, r.branch_mode) for r in records
    }
    for a in again:
        b = next(r for r in records
                 if (r.m, r.d, r.branch_mode) == (a.m, a.d, a.branch_mode))
        assert a.mean_recon_per_sec == b.mean_recon_per_sec
        assert a.variance == b.variance


def test_empty_records_give_header_only():
    assert emit_csv([]) == CSV_HEADER + "\n"


def test_parse_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_csv("nope\n1,2,3\n")


def test_matrix_dump_lower_diagonal():
    records = [
        BenchRecord("zp", m, d, "predicated", "interpreter", 10, float(m * 10 + d), 0.0)
        for m, d in default_grid(3)
    ]
    matrix = emit_matrix(records, "predicated")
    rows = matrix.splitlines()
    assert len(rows) == 3
    assert rows[0].split("\t") == [repr(11.0)]           # d=1: only m=1
    assert rows[1].split("\t") == [repr(12.0), repr(22.0)]
    assert rows[2].split("\t") == [repr(13.0), repr(23.0), repr(33.0)]


def test_matrix_empty_mode():
    assert emit_matrix([], "predicated") == ""


@pytest.mark.skipif(__import__("shutil").which("clang") is None, reason="no clang toolchain")
def test_external_backend_sweep():
    from splinegen.bench import ToolchainError

    vol = make_volume(ZP, (8, 8), seed=0)
    try:
        records = run_sweep(
            ZP, vol, grid=[(1, 7)], modes=("predicated",), trials=100,
            batch_size=50, backend="external",
        )
    except ToolchainError as e:
        pytest.skip(str(e))
    assert len(records) == 1
    assert records[0].backend == "external"
    assert records[0].mean_recon_per_sec > 0
