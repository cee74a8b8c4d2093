import pytest
from hypothesis import given, settings, strategies as st

from splinegen.model import load_fixture
from splinegen.poly import group_polynomial
from splinegen.schedule import ScheduleParams, Step, schedule_pipeline

from helpers import check_plan

ZP_PSI = load_fixture("zp").ref_polys[0].poly

GOLDEN_M2_D4 = (
    "FETCH c0\n"
    "FETCH c1\n"
    "FETCH c2\n"
    "FETCH c3\n"
    "STALL c0\n"
    "STALL c1\n"
    "COMPUTE 0\n"
    "FETCH c4\n"
    "FETCH c5\n"
    "STALL c2\n"
    "STALL c3\n"
    "COMPUTE 1\n"
    "FETCH c6\n"
    "STALL c4\n"
    "STALL c5\n"
    "COMPUTE 2\n"
    "STALL c6\n"
    "COMPUTE 3\n"
)


def zp_plan(m, d):
    chunks = group_polynomial(ZP_PSI, m, range(7))
    return schedule_pipeline(chunks, ScheduleParams(m, d)), chunks


def test_golden_trace_m2_d4():
    plan, _ = zp_plan(2, 4)
    assert plan.dump() == GOLDEN_M2_D4
    assert len(plan.steps) == 18


def test_single_chunk_all_fetches_then_stalls():
    chunks = group_polynomial(ZP_PSI, 7, range(7))
    plan = schedule_pipeline(chunks, ScheduleParams(7, 7))
    kinds = [s.kind for s in plan.steps]
    assert kinds == ["FETCH"] * 7 + ["STALL"] * 7 + ["COMPUTE"]


def test_max_in_flight_equals_min_d_n():
    for m in range(1, 8):
        for d in range(m, 9):
            plan, chunks = zp_plan(m, d)
            assert plan.max_in_flight() == min(d, 7)
            check_plan(plan, [b for _, b in chunks.chunks], d)


def test_params_reject_depth_below_group_size():
    with pytest.raises(ValueError):
        ScheduleParams(3, 2)


def test_params_reject_zero_group():
    with pytest.raises(ValueError):
        ScheduleParams(0, 1)


def test_params_reject_unknown_mode():
    with pytest.raises(ValueError):
        ScheduleParams(1, 1, branch_mode="speculative")


def test_step_str():
    assert str(Step("FETCH", 4)) == "FETCH c4"
    assert str(Step("COMPUTE", 2)) == "COMPUTE 2"


@given(n=st.integers(1, 24), m=st.integers(1, 6), extra=st.integers(0, 6))
@settings(max_examples=200, deadline=None)
def test_random_plans_pass_the_walker(n, m, extra):
    from fractions import Fraction

    from splinegen.poly import Poly

    p = Poly(1, {((0,), j): Fraction(1) for j in range(n)})
    chunks = group_polynomial(p, m, range(n))
    d = m + extra
    plan = schedule_pipeline(chunks, ScheduleParams(m, d))
    check_plan(plan, [b for _, b in chunks.chunks], d)
    assert plan.max_in_flight() == min(d, n)


def test_plan_dump_round_trip_structure():
    plan, _ = zp_plan(3, 5)
    lines = plan.dump().splitlines()
    rebuilt = []
    for line in lines:
        kind, arg = line.split()
        idx = int(arg[1:]) if arg.startswith("c") else int(arg)
        rebuilt.append(Step(kind, idx))
    assert tuple(rebuilt) == plan.steps
