import re
import shutil

import numpy as np
import pytest

from splinegen.bench import ToolchainError, _external_runner
from splinegen.codegen import GenConfig, generate
from splinegen.emit import build_manifest, emit_text, manifest_text, validate_text
from splinegen.ir import Builder, DataVolume, interpret_batch
from splinegen.model import load_fixture
from splinegen.schedule import ScheduleParams

ALL_FIXTURES = ["linear1d", "zp", "zp_k2", "trilinear", "trilinear_voronoi", "halfgrid1d"]


def gen(name, m=1, d=None, mode="predicated", unroll=True, width="f64"):
    space = load_fixture(name)
    depth = d if d is not None else space.stencil_size
    cfg = GenConfig(
        params=ScheduleParams(m, max(depth, m), branch_mode=mode),
        float_width=width,
        unroll_cosets=unroll,
    )
    return generate(space, cfg)


def test_header_matches_expected_signature_shape():
    text = emit_text(gen("zp", m=2, d=4))
    assert "define double @reconstruct(double %x0, double %x1," in text


def test_one_parameter_per_spatial_dimension():
    for name, dim in [("linear1d", 1), ("zp", 2), ("trilinear", 3)]:
        text = emit_text(gen(name))
        header = next(ln for ln in text.splitlines() if ln.startswith("define"))
        assert header.count("double %x") == dim


def test_sigma_emitted_as_byte_array():
    text = emit_text(gen("zp"))
    assert "@sigma = addrspace(4) constant [4 x i8] [i8 2, i8 3, i8 1, i8 0]" in text


def test_float32_width_emission():
    text = emit_text(gen("zp", width="f32"))
    assert "define float @reconstruct(float %x0" in text
    assert "@llvm.round.f32" in text
    assert validate_text(text) == []


def test_ret_only_program_is_minimal():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("ret", 0.0)
    text = emit_text(b.finish())
    assert validate_text(text) == []
    body = [ln.strip() for ln in text.splitlines()
            if ln.strip() and not ln.startswith(";")]
    assert body[-2] == "ret double 0x0000000000000000"
    assert body[-1] == "}"


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_all_fixtures_emit_validating_text(name):
    for unroll in (True, False):
        text = emit_text(gen(name, m=1, unroll=unroll))
        assert validate_text(text) == [], f"{name} unroll={unroll}"


def test_emission_is_byte_deterministic():
    a = emit_text(gen("zp_k2", m=2, d=5, mode="branchy"))
    b = emit_text(gen("zp_k2", m=2, d=5, mode="branchy"))
    assert a == b


@pytest.mark.parametrize("m,mode,refetch", [
    (1, "predicated", False), (4, "branchy", False),
    (7, "predicated", True), (2, "branchy", True),
])
def test_generated_grid_emits_clean_text(m, mode, refetch):
    space = load_fixture("zp_k2")
    cfg = GenConfig(
        params=ScheduleParams(m, 7, branch_mode=mode, refetch_tables=refetch)
    )
    assert validate_text(emit_text(generate(space, cfg))) == []


def test_hex_float_literals_round_trip():
    import struct

    text = emit_text(gen("zp"))
    hexes = re.findall(r"0x([0-9A-F]{16})", text)
    assert hexes
    # one of them must be exactly 0.5 (the half in the rounding constant table)
    values = {struct.unpack(">d", bytes.fromhex(h))[0] for h in hexes}
    assert 1.0 in values or -1.0 in values


def test_validator_catches_mutations():
    text = emit_text(gen("zp", m=2, d=4))
    bad = text.replace("fadd", "fzap", 1)
    assert any("unrecognized" in p for p in validate_text(bad))
    bad = text.replace("ret double", "ret quadruple", 1)
    assert validate_text(bad)
    lines = text.splitlines()
    # duplicate an assignment
    dup = next(ln for ln in lines if re.match(r"^\s*%v\d+ = fadd", ln))
    assert any("assigned more than once" in p
               for p in validate_text(text.replace(dup, dup + "\n" + dup, 1)))
    # drop the closing brace
    assert any("unbalanced" in p or "no function" in p
               for p in validate_text(text.replace("\n}", "")))


def test_validator_flags_undefined_values():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("ret", b.emit("fadd", b.param(0), 2.0))
    text = emit_text(b.finish())
    broken = text.replace("%x0, 0x", "%x9, 0x")
    assert any("never defined" in p for p in validate_text(broken))


def test_manifest_contents():
    prog = gen("zp", m=2, d=4, mode="branchy")
    doc = build_manifest(prog)
    assert doc["spline"] == "zp"
    assert doc["group_size"] == "2"
    assert doc["pipeline_depth"] == "4"
    assert doc["branch_mode"] == "branchy"
    assert manifest_text(prog).endswith("\n")


@pytest.mark.skipif(shutil.which("clang") is None, reason="no clang toolchain")
@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_clang_compiled_kernel_matches_interpreter(name):
    space = load_fixture(name)
    prog = gen(name, m=2, d=max(2, space.stencil_size), mode="branchy")
    rng = np.random.default_rng(11)
    vol = DataVolume([rng.random((6,) * space.dim) for _ in range(space.ncosets)])
    pts = rng.random((100, space.dim)) * 6
    try:
        runner = _external_runner(prog, vol)
    except ToolchainError as e:
        pytest.skip(str(e))
    native = runner(pts)
    ours = interpret_batch(prog, pts, vol)
    assert np.array_equal(native, ours)


@pytest.mark.skipif(shutil.which("clang") is None, reason="no clang toolchain")
def test_clang_parity_for_coset_loop():
    prog = gen("halfgrid1d", m=1, d=1, unroll=False)
    rng = np.random.default_rng(13)
    vol = DataVolume([rng.random(12), rng.random(12)])
    pts = rng.random((100, 1)) * 12
    try:
        runner = _external_runner(prog, vol)
    except ToolchainError as e:
        pytest.skip(str(e))
    assert np.array_equal(runner(pts), interpret_batch(prog, pts, vol))


@pytest.mark.skipif(shutil.which("clang") is None, reason="no clang toolchain")
def test_clang_parity_for_float32():
    prog = gen("zp", m=2, d=4, width="f32")
    rng = np.random.default_rng(15)
    vol = DataVolume([rng.random((8, 8)).astype(np.float32)])
    pts = rng.random((100, 2)) * 8
    try:
        runner = _external_runner(prog, vol)
    except ToolchainError as e:
        pytest.skip(str(e))
    native = np.asarray(runner(pts), dtype=np.float32)
    ours = interpret_batch(prog, pts, vol)
    assert np.array_equal(native, ours)
