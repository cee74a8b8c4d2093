import numpy as np
import pytest

from splinegen.ir import (
    Builder,
    CallableData,
    DataVolume,
    InterpreterError,
    IrError,
    count_ops,
    interpret,
    interpret_batch,
)


def ret_constant(value=0.0):
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("ret", value)
    return b.finish()


def ones_data(dim=1, extent=4, ncosets=1):
    return DataVolume([np.ones((extent,) * dim) for _ in range(ncosets)])


def test_ret_constant_program():
    prog = ret_constant(0.0)
    assert len(prog.blocks) == 1
    assert interpret(prog, [0.3], ones_data()) == 0.0


def test_use_before_def_rejected():
    from splinegen.ir import Ref

    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("fadd", Ref(99), 1.0)
    b.emit("ret", 0.0)
    with pytest.raises(IrError) as err:
        b.finish()
    assert "%99" in str(err.value)


def test_missing_terminator_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("fadd", b.param(0), 1.0)
    with pytest.raises(IrError) as err:
        b.finish()
    assert "terminator" in str(err.value)


def test_two_rets_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("condbr", b.emit("fcmp_olt", b.param(0), 0.5), labels=("a", "b"))
    b.block("a")
    b.emit("ret", 0.0)
    b.block("b")
    b.emit("ret", 1.0)
    with pytest.raises(IrError) as err:
        b.finish()
    assert "exactly one ret" in str(err.value)


def test_type_mismatch_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("iadd", b.param(0), 1)  # float into an integer op
    b.emit("ret", 0.0)
    with pytest.raises(IrError):
        b.finish()


def test_unreachable_block_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("ret", 0.0)
    b.block("island")
    b.emit("br", labels=("entry",))
    with pytest.raises(IrError) as err:
        b.finish()
    assert "unreachable" in str(err.value)


def test_phi_in_entry_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    p = b.phi()
    b.set_incoming(p, [("entry", 0.0)])
    b.emit("ret", 0.0)
    with pytest.raises(IrError):
        b.finish()


def test_dominance_violation_rejected():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    pred = b.emit("fcmp_olt", b.param(0), 0.5)
    b.emit("condbr", pred, labels=("left", "right"))
    b.block("left")
    v = b.emit("fadd", b.param(0), 1.0)
    b.emit("br", labels=("join",))
    b.block("right")
    w = b.emit("fadd", v, 1.0)  # v does not dominate right
    b.emit("br", labels=("join",))
    b.block("join")
    g = b.phi()
    b.set_incoming(g, [("left", v), ("right", w)])
    b.emit("ret", g)
    with pytest.raises(IrError) as err:
        b.finish()
    assert "dominate" in str(err.value)


def diamond_program():
    """|x| via a branch, plus a phi join."""
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    pred = b.emit("fcmp_olt", b.param(0), 0.0)
    b.emit("condbr", pred, labels=("neg", "pos"))
    b.block("neg")
    flipped = b.emit("fneg", b.param(0))
    b.emit("br", labels=("join",))
    b.block("pos")
    b.emit("br", labels=("join",))
    b.block("join")
    out = b.phi()
    b.set_incoming(out, [("neg", flipped), ("pos", b.param(0))])
    b.emit("ret", out)
    return b.finish()


def test_diamond_divergence():
    prog = diamond_program()
    xs = np.array([[-2.0], [3.0], [-0.5], [0.0]])
    got = interpret_batch(prog, xs, ones_data())
    assert np.array_equal(got, np.array([2.0, 3.0, 0.5, 0.0]))


def test_scalar_matches_batch_bitwise():
    prog = diamond_program()
    xs = np.linspace(-3, 3, 17).reshape(-1, 1)
    batch = interpret_batch(prog, xs, ones_data())
    singles = np.array([interpret(prog, row, ones_data()) for row in xs])
    assert np.array_equal(batch, singles)


def test_interpret_is_pure_and_deterministic():
    prog = diamond_program()
    xs = np.random.default_rng(0).uniform(-4, 4, size=(64, 1))
    a = interpret_batch(prog, xs, ones_data())
    b = interpret_batch(prog, xs, ones_data())
    assert np.array_equal(a, b)


def loop_program(trip):
    """Sum x over `trip` iterations of a counted loop."""
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    b.emit("br", labels=("head",))
    b.block("head")
    i = b.phi()
    acc = b.phi()
    nxt = b.emit("fadd", acc, b.param(0))
    inxt = b.emit("iadd", i, 1)
    more = b.emit("icmp_slt", inxt, trip)
    b.emit("condbr", more, labels=("head", "exit"))
    b.set_incoming(i, [("entry", 0), ("head", inxt)])
    b.set_incoming(acc, [("entry", 0.0), ("head", nxt)])
    b.block("exit")
    b.emit("ret", nxt)
    return b.finish()


def test_loop_execution():
    prog = loop_program(5)
    assert interpret(prog, [2.0], ones_data()) == 10.0


def test_instruction_budget_guard():
    prog = loop_program(10_000_000)
    with pytest.raises(InterpreterError) as err:
        interpret(prog, [1.0], ones_data(), max_steps=1000)
    assert "budget" in str(err.value)


def test_table_load_and_bounds():
    b = Builder("reconstruct", dim=1)
    b.add_table("weights", "float", [0.5, 1.5, 2.5])
    b.block("entry")
    idx = b.emit("fptosi_floor", b.param(0))
    b.emit("ret", b.emit("table_load", idx, table="weights"))
    prog = b.finish()
    assert interpret(prog, [1.2], ones_data()) == 1.5
    with pytest.raises(InterpreterError) as err:
        interpret(prog, [7.0], ones_data())
    assert "weights" in str(err.value) and "sigma" in str(err.value)


def test_data_fetch_periodic_wrap():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    idx = b.emit("fptosi_floor", b.param(0))
    b.emit("ret", b.emit("data_fetch", 0, idx))
    prog = b.finish()
    samples = DataVolume([np.arange(4, dtype=np.float64)])
    assert interpret(prog, [5.0], samples) == 1.0   # 5 mod 4
    assert interpret(prog, [-1.0], samples) == 3.0  # -1 mod 4


def test_data_fetch_callable_hook():
    b = Builder("reconstruct", dim=2)
    b.block("entry")
    i = b.emit("fptosi_floor", b.param(0))
    j = b.emit("fptosi_floor", b.param(1))
    b.emit("ret", b.emit("data_fetch", 0, i, j))
    prog = b.finish()
    hook = CallableData(lambda coset, site: float(10 * site[0] + site[1]), dim=2)
    assert interpret(prog, [3.7, 2.1], hook) == 32.0


def test_fptosi_round_half_away():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    r = b.emit("fptosi_round", b.param(0))
    b.emit("ret", b.emit("sitofp", r))
    prog = b.finish()
    cases = {0.4: 0.0, 0.5: 1.0, -0.5: -1.0, 1.5: 2.0, -2.5: -3.0, 2.49: 2.0}
    for x, want in cases.items():
        assert interpret(prog, [x], ones_data()) == want


def test_select_and_compare_ops():
    b = Builder("reconstruct", dim=2)
    b.block("entry")
    pred = b.emit("fcmp_oge", b.param(0), b.param(1))
    b.emit("ret", b.emit("select", pred, b.param(0), b.param(1)))
    prog = b.finish()
    assert interpret(prog, [2.0, 3.0], ones_data(2)) == 3.0
    assert interpret(prog, [4.0, 3.0], ones_data(2)) == 4.0


def test_integer_bit_ops():
    b = Builder("reconstruct", dim=1)
    b.block("entry")
    bit0 = b.emit("zext", b.emit("fcmp_oge", b.param(0), 0.0))
    bit1 = b.emit("shl", b.emit("zext", b.emit("fcmp_oge", b.param(0), 1.0)), 1)
    q = b.emit("or", bit0, bit1)
    q = b.emit("urem", q, 3)
    b.emit("ret", b.emit("sitofp", q))
    prog = b.finish()
    assert interpret(prog, [-1.0], ones_data()) == 0.0
    assert interpret(prog, [0.5], ones_data()) == 1.0
    assert interpret(prog, [1.5], ones_data()) == 0.0  # q = 3 wraps to 0


def test_float32_width():
    b = Builder("reconstruct", dim=1, float_width="f32")
    b.block("entry")
    b.emit("ret", b.emit("fadd", b.param(0), 0.1))
    prog = b.finish()
    got = interpret(prog, [0.2], ones_data())
    assert got == float(np.float32(np.float32(0.2) + np.float32(0.1)))


def test_count_ops():
    prog = diamond_program()
    counts = count_ops(prog)
    assert counts["condbr"] == 1
    assert counts["phi"] == 1
    assert counts["ret"] == 1


def test_dump_is_deterministic():
    a = diamond_program().dump()
    b = diamond_program().dump()
    assert a == b and "reconstruct" in a


def test_volume_extent_validation():
    with pytest.raises(ValueError):
        DataVolume([np.ones((0, 3))])
    with pytest.raises(ValueError):
        DataVolume([np.ones((2, 2)), np.ones((2, 2), dtype=np.float32)])


def test_coset_count_checked():
    prog = ret_constant()
    with pytest.raises(InterpreterError):
        interpret(prog, [0.0], ones_data(ncosets=2))
