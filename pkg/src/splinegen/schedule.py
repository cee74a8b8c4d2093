"""Software-pipelined fetch/compute schedules for chunked polynomials.

A plan interleaves three step kinds: FETCH commits a coefficient read to the
memory controller, STALL waits for one to land, and COMPUTE evaluates the
next polynomial chunk.  At most `pipeline_depth` reads are in flight at any
point, and a chunk is computed only after all of its symbols have been
stalled on.  The scheduler is greedy: it fills the pipeline, then per chunk
stalls the chunk's symbols, computes, and backfills reads up to the depth
before the next stall run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .poly import ChunkSet

PREDICATED = "predicated"
BRANCHY = "branchy"
BRANCH_MODES = (PREDICATED, BRANCHY)

FETCH = "FETCH"
STALL = "STALL"
COMPUTE = "COMPUTE"


@dataclass(frozen=True)
class ScheduleParams:
    group_size: int
    pipeline_depth: int
    branch_mode: str = PREDICATED
    refetch_tables: bool = False

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group size must be at least 1")
        if self.pipeline_depth < self.group_size:
            raise ValueError(
                f"pipeline depth {self.pipeline_depth} must be >= group size {self.group_size}"
            )
        if self.branch_mode not in BRANCH_MODES:
            raise ValueError(f"branch mode must be one of {BRANCH_MODES}")


@dataclass(frozen=True)
class Step:
    kind: str
    index: int  # symbol index for FETCH/STALL, chunk index for COMPUTE

    def __str__(self) -> str:
        if self.kind == COMPUTE:
            return f"{COMPUTE} {self.index}"
        return f"{self.kind} c{self.index}"


@dataclass(frozen=True)
class EvalPlan:
    steps: tuple[Step, ...]
    depth: int
    blocks: tuple[tuple[int, ...], ...] = field(default=())

    def dump(self) -> str:
        """One step per line; the golden-trace format."""
        return "".join(f"{step}\n" for step in self.steps)

    @property
    def symbols(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.steps if s.kind == FETCH)

    def max_in_flight(self) -> int:
        peak = flight = 0
        for step in self.steps:
            if step.kind == FETCH:
                flight += 1
                peak = max(peak, flight)
            elif step.kind == STALL:
                flight -= 1
        return peak


def schedule_pipeline(chunks: ChunkSet, params: ScheduleParams) -> EvalPlan:
    """Greedy schedule for one chunk set under the given pipeline depth."""
    blocks = tuple(block for _, block in chunks.chunks)
    order = [j for block in blocks for j in block]
    depth = params.pipeline_depth
    steps: list[Step] = []
    next_fetch = 0
    in_flight = 0

    def backfill():
        nonlocal next_fetch, in_flight
        while next_fetch < len(order) and in_flight < depth:
            steps.append(Step(FETCH, order[next_fetch]))
            next_fetch += 1
            in_flight += 1

    backfill()
    for k, block in enumerate(blocks):
        for j in block:
            steps.append(Step(STALL, j))
            in_flight -= 1
        steps.append(Step(COMPUTE, k))
        backfill()
    return EvalPlan(steps=tuple(steps), depth=depth, blocks=blocks)
