"""SSA-form program representation, verifier and interpreter.

A program holds named read-only constant tables, a list of labeled blocks and
an instruction stream in single static assignment form.  The first `dim`
value ids are the spatial input parameters.  `data_fetch` is the only
instruction that touches external data; it indexes per-coset sample arrays
with periodic wraparound.

The interpreter executes a whole batch of evaluation points at once: values
are numpy arrays with one lane per point, and control-flow divergence is
handled by partitioning lanes at conditional branches (the same trick a SIMT
machine uses).  Running a single point is the one-lane special case, so
scalar and batch execution share every code path and are bitwise identical.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

DEFAULT_BUDGET = 5_000_000

F64 = "f64"
F32 = "f32"

_DTYPES = {F64: np.float64, F32: np.float32}


class IrError(Exception):
    """Structural or SSA violation in a program under construction."""


class InterpreterError(Exception):
    """Runtime failure: bad table index, bad data, or budget exceeded."""


@dataclass(frozen=True)
class Ref:
    vid: int


Operand = Ref | float | int


@dataclass(frozen=True)
class Instr:
    vid: int | None
    op: str
    args: tuple = ()
    table: str | None = None
    labels: tuple[str, ...] = ()
    incoming: tuple[tuple[str, Operand], ...] = ()


@dataclass(frozen=True)
class Block:
    label: str
    instrs: tuple[Instr, ...]


@dataclass(frozen=True)
class Table:
    name: str
    kind: str  # "int" or "float"
    values: tuple

    def as_array(self, float_dtype):
        if self.kind == "int":
            return np.asarray(self.values, dtype=np.int64)
        return np.asarray(self.values, dtype=float_dtype)


@dataclass(frozen=True)
class IrProgram:
    name: str
    dim: int
    ncosets: int
    float_width: str
    tables: tuple[Table, ...]
    blocks: tuple[Block, ...]
    nvalues: int
    source: str = ""
    meta: tuple[tuple[str, str], ...] = ()

    @property
    def dtype(self):
        return _DTYPES[self.float_width]

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def instructions(self):
        for block in self.blocks:
            yield from block.instrs

    def dump(self) -> str:
        """Deterministic textual listing (internal format, for tests/debug)."""
        lines = [f"program {self.name} dim={self.dim} cosets={self.ncosets} {self.float_width}"]
        for t in self.tables:
            lines.append(f"table {t.name} {t.kind} {list(t.values)}")
        for block in self.blocks:
            lines.append(f"{block.label}:")
            for ins in block.instrs:
                lines.append("  " + _format_instr(ins))
        return "\n".join(lines) + "\n"


def _format_operand(op) -> str:
    if isinstance(op, Ref):
        return f"%{op.vid}"
    if isinstance(op, float):
        return repr(op)
    return str(op)


def _format_instr(ins: Instr) -> str:
    head = f"%{ins.vid} = {ins.op}" if ins.vid is not None else ins.op
    parts = [head]
    if ins.table:
        parts.append(f"@{ins.table}")
    parts += [_format_operand(a) for a in ins.args]
    parts += [f"->{label}" for label in ins.labels]
    parts += [f"[{label}: {_format_operand(v)}]" for label, v in ins.incoming]
    return " ".join(parts)


TERMINATORS = ("br", "condbr", "ret")

# op -> (operand types, result type); "x" matches int or float, "r" repeats
_SIGNATURES = {
    "fadd": ("ff", "f"),
    "fsub": ("ff", "f"),
    "fmul": ("ff", "f"),
    "fdiv": ("ff", "f"),
    "fneg": ("f", "f"),
    "fcmp_olt": ("ff", "b"),
    "fcmp_oge": ("ff", "b"),
    "fcmp_oeq": ("ff", "b"),
    "icmp_eq": ("ii", "b"),
    "icmp_slt": ("ii", "b"),
    "and": ("ii", "i"),
    "or": ("ii", "i"),
    "shl": ("ii", "i"),
    "iadd": ("ii", "i"),
    "imul": ("ii", "i"),
    "urem": ("ii", "i"),
    "zext": ("b", "i"),
    "sitofp": ("i", "f"),
    "fptosi_floor": ("f", "i"),
    "fptosi_round": ("f", "i"),
}


class Builder:
    """Incremental program construction; `finish` verifies and freezes."""

    def __init__(self, name: str, dim: int, ncosets: int = 1,
                 float_width: str = F64, source: str = ""):
        if float_width not in _DTYPES:
            raise IrError(f"unknown float width {float_width!r}")
        self.name = name
        self.dim = dim
        self.ncosets = ncosets
        self.float_width = float_width
        self.source = source
        self._tables: dict[str, Table] = {}
        self._blocks: list[tuple[str, list[Instr]]] = []
        self._next_vid = dim  # value ids 0..dim-1 are the x parameters

    def param(self, d: int) -> Ref:
        if not 0 <= d < self.dim:
            raise IrError(f"no parameter {d}")
        return Ref(d)

    def add_table(self, name: str, kind: str, values) -> str:
        if name in self._tables:
            raise IrError(f"table {name!r} already defined")
        if kind not in ("int", "float"):
            raise IrError(f"table kind must be int or float, not {kind!r}")
        self._tables[name] = Table(name=name, kind=kind, values=tuple(values))
        return name

    def block(self, label: str) -> str:
        if any(l == label for l, _ in self._blocks):
            raise IrError(f"duplicate block label {label!r}")
        self._blocks.append((label, []))
        return label

    @property
    def current_label(self) -> str:
        if not self._blocks:
            raise IrError("no block started yet")
        return self._blocks[-1][0]

    def _append(self, instr: Instr):
        if not self._blocks:
            raise IrError("no block to emit into; call block() first")
        self._blocks[-1][1].append(instr)

    def emit(self, op: str, *args, table: str | None = None,
             labels: tuple[str, ...] = ()) -> Ref | None:
        if op in TERMINATORS:
            self._append(Instr(vid=None, op=op, args=tuple(args), labels=tuple(labels)))
            return None
        vid = self._next_vid
        self._next_vid += 1
        self._append(Instr(vid=vid, op=op, args=tuple(args), table=table))
        return Ref(vid)

    def phi(self) -> Ref:
        """Emit a phi with incoming edges to be patched in later."""
        vid = self._next_vid
        self._next_vid += 1
        self._append(Instr(vid=vid, op="phi"))
        return Ref(vid)

    def set_incoming(self, ref: Ref, incoming) -> None:
        for bi, (label, instrs) in enumerate(self._blocks):
            for ii, ins in enumerate(instrs):
                if ins.vid == ref.vid:
                    if ins.op != "phi":
                        raise IrError(f"%{ref.vid} is not a phi")
                    instrs[ii] = Instr(vid=ins.vid, op="phi",
                                       incoming=tuple((l, v) for l, v in incoming))
                    return
        raise IrError(f"no instruction defines %{ref.vid}")

    def finish(self, meta: dict | None = None) -> IrProgram:
        prog = IrProgram(
            name=self.name,
            dim=self.dim,
            ncosets=self.ncosets,
            float_width=self.float_width,
            tables=tuple(self._tables.values()),
            blocks=tuple(Block(label, tuple(instrs)) for label, instrs in self._blocks),
            nvalues=self._next_vid,
            source=self.source,
            meta=tuple(sorted((meta or {}).items())),
        )
        verify(prog)
        return prog


def build(builder: Builder, meta: dict | None = None) -> IrProgram:
    return builder.finish(meta)


# -- verification -----------------------------------------------------------------


def _successors(block: Block) -> tuple[str, ...]:
    term = block.instrs[-1]
    return term.labels


def _compute_dominators(prog: IrProgram, index: dict[str, int]) -> list[int]:
    """Immediate dominators by iterative dataflow; entry dominates itself."""
    nblocks = len(prog.blocks)
    preds: list[list[int]] = [[] for _ in range(nblocks)]
    for bi, block in enumerate(prog.blocks):
        for label in _successors(block):
            preds[index[label]].append(bi)

    # reverse postorder from the entry block
    seen = [False] * nblocks
    post: list[int] = []

    def dfs(b):
        seen[b] = True
        for label in _successors(prog.blocks[b]):
            t = index[label]
            if not seen[t]:
                dfs(t)
        post.append(b)

    dfs(0)
    rpo = list(reversed(post))
    if len(rpo) != nblocks:
        missing = [prog.blocks[i].label for i in range(nblocks) if not seen[i]]
        raise IrError(f"unreachable blocks: {missing}")
    order = {b: i for i, b in enumerate(rpo)}

    idom = [-1] * nblocks
    idom[0] = 0
    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            candidates = [p for p in preds[b] if idom[p] != -1]
            new = candidates[0]
            for p in candidates[1:]:
                x, y = new, p
                while x != y:
                    while order[x] > order[y]:
                        x = idom[x]
                    while order[y] > order[x]:
                        y = idom[y]
                new = x
            if idom[b] != new:
                idom[b] = new
                changed = True
    return idom


def _infer_types(prog: IrProgram, def_site: dict) -> dict[int, str]:
    """Value types; phi and select sources may be forward references."""
    table_kinds = {t.name: t.kind for t in prog.tables}
    types: dict[int, str] = {d: "f" for d in range(prog.dim)}
    pending = [ins for ins in prog.instructions() if ins.vid is not None]
    while pending:
        again = []
        for ins in pending:
            if ins.op in _SIGNATURES:
                types[ins.vid] = _SIGNATURES[ins.op][1]
            elif ins.op == "table_load":
                if ins.table not in table_kinds:
                    raise IrError(f"unknown table {ins.table!r}")
                types[ins.vid] = "f" if table_kinds[ins.table] == "float" else "i"
            elif ins.op == "data_fetch":
                types[ins.vid] = "f"
            elif ins.op in ("select", "phi"):
                if ins.op == "select":
                    if len(ins.args) != 3:
                        raise IrError(f"select %{ins.vid} takes 3 operands")
                    source = ins.args[1]
                elif ins.incoming:
                    source = ins.incoming[0][1]
                else:
                    raise IrError(f"phi %{ins.vid} has no incoming edges")
                if isinstance(source, Ref):
                    if source.vid not in def_site:
                        raise IrError(f"%{source.vid} is never defined")
                    if source.vid not in types:
                        again.append(ins)
                        continue
                    types[ins.vid] = types[source.vid]
                else:
                    types[ins.vid] = "f" if isinstance(source, float) else "i"
            else:
                raise IrError(f"unknown op {ins.op!r}")
        if len(again) == len(pending):
            raise IrError("could not type values (cyclic phi definitions)")
        pending = again
    return types


def verify(prog: IrProgram) -> None:
    """Raise IrError unless the program is well formed SSA."""
    if not prog.blocks:
        raise IrError("program has no blocks")
    labels = [b.label for b in prog.blocks]
    if len(set(labels)) != len(labels):
        raise IrError("duplicate block labels")
    index = {label: i for i, label in enumerate(labels)}
    table_names = {t.name for t in prog.tables}

    nret = 0
    for block in prog.blocks:
        if not block.instrs:
            raise IrError(f"block {block.label} is empty")
        for ins in block.instrs[:-1]:
            if ins.op in TERMINATORS:
                raise IrError(f"terminator {ins.op} before end of block {block.label}")
        term = block.instrs[-1]
        if term.op not in TERMINATORS:
            raise IrError(f"block {block.label} does not end with a terminator")
        for label in term.labels:
            if label not in index:
                raise IrError(f"branch to unknown label {label!r} in block {block.label}")
        if term.op == "ret":
            nret += 1
        seen_non_phi = False
        for ins in block.instrs:
            if ins.op == "phi":
                if seen_non_phi:
                    raise IrError(f"phi after non-phi instruction in block {block.label}")
            else:
                seen_non_phi = True
    if nret != 1:
        raise IrError(f"program must contain exactly one ret, found {nret}")

    # single assignment and definition sites
    def_site: dict[int, tuple[int, int]] = {d: (-1, d) for d in range(prog.dim)}
    for bi, block in enumerate(prog.blocks):
        for ii, ins in enumerate(block.instrs):
            if ins.vid is None:
                continue
            if ins.vid in def_site:
                raise IrError(f"%{ins.vid} assigned more than once")
            def_site[ins.vid] = (bi, ii)

    types = _infer_types(prog, def_site)
    idom = _compute_dominators(prog, index)

    def dominates(a: int, b: int) -> bool:
        while True:
            if a == b:
                return True
            if b == 0:
                return False
            b = idom[b]

    preds: dict[int, list[int]] = {i: [] for i in range(len(prog.blocks))}
    for bi, block in enumerate(prog.blocks):
        for label in _successors(block):
            preds[index[label]].append(bi)

    def operand_type(op, where: str) -> str:
        if isinstance(op, Ref):
            if op.vid not in types:
                raise IrError(f"{where}: %{op.vid} is never defined")
            return types[op.vid]
        if isinstance(op, bool):
            raise IrError(f"{where}: bool immediates are not allowed")
        if isinstance(op, float):
            return "f"
        if isinstance(op, int):
            return "i"
        raise IrError(f"{where}: bad operand {op!r}")

    def check_use(op, bi: int, ii: int, where: str):
        if not isinstance(op, Ref):
            return
        if op.vid not in def_site:
            raise IrError(f"{where}: %{op.vid} is never defined")
        db, di = def_site[op.vid]
        if db == -1:  # parameter
            return
        if db == bi:
            if di >= ii:
                raise IrError(f"{where}: %{op.vid} used before its definition")
        elif not dominates(db, bi):
            raise IrError(f"{where}: definition of %{op.vid} does not dominate the use")

    for bi, block in enumerate(prog.blocks):
        for ii, ins in enumerate(block.instrs):
            where = f"{block.label}/{_format_instr(ins)}"
            if ins.op == "phi":
                if bi == 0:
                    raise IrError(f"{where}: phi in entry block")
                got = sorted(index[l] for l, _ in ins.incoming)
                want = sorted(preds[bi])
                if got != want:
                    raise IrError(f"{where}: phi incoming edges do not match predecessors")
                itypes = set()
                for label, op in ins.incoming:
                    itypes.add(operand_type(op, where))
                    if isinstance(op, Ref):
                        db, _ = def_site.get(op.vid, (None, None))
                        if db is None:
                            raise IrError(f"{where}: %{op.vid} is never defined")
                        if db != -1 and not dominates(db, index[label]):
                            raise IrError(
                                f"{where}: incoming %{op.vid} does not dominate edge {label}"
                            )
                if len(itypes) != 1:
                    raise IrError(f"{where}: mixed incoming types {sorted(itypes)}")
                types[ins.vid] = itypes.pop()
                continue

            for a in ins.args:
                check_use(a, bi, ii, where)

            if ins.op in _SIGNATURES:
                want, result = _SIGNATURES[ins.op]
                if len(ins.args) != len(want):
                    raise IrError(f"{where}: expected {len(want)} operands")
                for a, w in zip(ins.args, want):
                    t = operand_type(a, where)
                    if t != w:
                        raise IrError(f"{where}: operand type {t}, expected {w}")
                types[ins.vid] = result
            elif ins.op == "select":
                if len(ins.args) != 3:
                    raise IrError(f"{where}: select takes 3 operands")
                if operand_type(ins.args[0], where) != "b":
                    raise IrError(f"{where}: select predicate must be a comparison result")
                t1 = operand_type(ins.args[1], where)
                t2 = operand_type(ins.args[2], where)
                if t1 != t2:
                    raise IrError(f"{where}: select arms disagree ({t1} vs {t2})")
                types[ins.vid] = t1
            elif ins.op == "table_load":
                if ins.table not in table_names:
                    raise IrError(f"{where}: unknown table {ins.table!r}")
                if len(ins.args) != 1 or operand_type(ins.args[0], where) != "i":
                    raise IrError(f"{where}: table_load takes one integer index")
                types[ins.vid] = "f" if prog.table(ins.table).kind == "float" else "i"
            elif ins.op == "data_fetch":
                if len(ins.args) != prog.dim + 1:
                    raise IrError(f"{where}: data_fetch takes coset + {prog.dim} coordinates")
                for a in ins.args:
                    if operand_type(a, where) != "i":
                        raise IrError(f"{where}: data_fetch operands must be integers")
                coset = ins.args[0]
                if isinstance(coset, int) and not 0 <= coset < prog.ncosets:
                    raise IrError(f"{where}: coset {coset} out of range")
                types[ins.vid] = "f"
            elif ins.op == "br":
                if len(ins.labels) != 1 or ins.args:
                    raise IrError(f"{where}: br takes a single label")
            elif ins.op == "condbr":
                if len(ins.labels) != 2 or len(ins.args) != 1:
                    raise IrError(f"{where}: condbr takes a predicate and two labels")
                if operand_type(ins.args[0], where) != "b":
                    raise IrError(f"{where}: condbr predicate must be a comparison result")
            elif ins.op == "ret":
                if len(ins.args) != 1:
                    raise IrError(f"{where}: ret takes one value")
                if operand_type(ins.args[0], where) != "f":
                    raise IrError(f"{where}: function returns a float value")
            else:
                raise IrError(f"{where}: unknown op {ins.op!r}")


# -- data volumes --------------------------------------------------------------------


class DataVolume:
    """Per-coset sample arrays with periodic indexing."""

    def __init__(self, arrays):
        arrs = tuple(np.asarray(a) for a in arrays)
        if not arrs:
            raise ValueError("at least one coset array is required")
        dtype = arrs[0].dtype
        if dtype not in (np.float32, np.float64):
            raise ValueError("sample arrays must be float32 or float64")
        if any(a.dtype != dtype for a in arrs):
            raise ValueError("all coset arrays must share a dtype")
        ndim = arrs[0].ndim
        if any(a.ndim != ndim for a in arrs):
            raise ValueError("all coset arrays must share a rank")
        if any(s < 1 for a in arrs for s in a.shape):
            raise ValueError("extents must be positive")
        self.arrays = arrs

    @property
    def ncosets(self) -> int:
        return len(self.arrays)

    @property
    def dim(self) -> int:
        return self.arrays[0].ndim

    @property
    def extents(self) -> tuple[tuple[int, ...], ...]:
        return tuple(a.shape for a in self.arrays)

    def fetch(self, coset: int, coords):
        arr = self.arrays[coset]
        idx = tuple(np.asarray(c) % e for c, e in zip(coords, arr.shape))
        return arr[idx]


class CallableData:
    """Adapter exposing a site -> value function as a fetch primitive."""

    def __init__(self, fn, dim: int, ncosets: int = 1):
        self.fn = fn
        self.dim = dim
        self.ncosets = ncosets

    def fetch(self, coset: int, coords):
        arrays = [np.atleast_1d(np.asarray(c)) for c in coords]
        n = max(a.shape[0] for a in arrays)
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            site = tuple(int(a[i if a.shape[0] > 1 else 0]) for a in arrays)
            out[i] = self.fn(coset, site)
        return out if n > 1 else out[0]


# -- interpretation -------------------------------------------------------------------


def interpret_batch(prog: IrProgram, xs, data, max_steps: int = DEFAULT_BUDGET,
                    counter: Counter | None = None) -> np.ndarray:
    """Execute the program over a batch of points.

    `xs` has shape (N, dim); the result has shape (N,).  `data` is a
    DataVolume (or anything exposing `ncosets` and `fetch`).
    """
    dtype = prog.dtype
    xs = np.asarray(xs, dtype=dtype)
    if xs.ndim != 2 or xs.shape[1] != prog.dim:
        raise InterpreterError(f"expected points of shape (N, {prog.dim})")
    if data.ncosets != prog.ncosets:
        raise InterpreterError(
            f"data has {data.ncosets} cosets, program wants {prog.ncosets}"
        )
    n = xs.shape[0]
    tables = {t.name: t.as_array(dtype) for t in prog.tables}
    index = {b.label: i for i, b in enumerate(prog.blocks)}

    env: list = [None] * prog.nvalues
    for d in range(prog.dim):
        env[d] = xs[:, d].copy()
    result = np.zeros(n, dtype=dtype)
    done = np.zeros(n, dtype=bool)

    def resolve(op, lanes):
        if isinstance(op, Ref):
            v = env[op.vid]
            return v if lanes is None else v[lanes]
        if isinstance(op, float):
            return dtype(op)
        return np.int64(op)

    def store(vid, value, lanes):
        if lanes is None:
            env[vid] = _materialize(value, n)
        else:
            if env[vid] is None:
                proto = np.asarray(value)
                env[vid] = np.zeros(n, dtype=proto.dtype)
            env[vid][lanes] = value

    steps = 0
    queue = deque([(0, None, None)])  # block index, lanes (None = all), pred label
    while queue:
        bi, lanes, pred = queue.popleft()
        block = prog.blocks[bi]
        steps += len(block.instrs)
        if steps > max_steps:
            raise InterpreterError(f"instruction budget {max_steps} exceeded")
        if counter is not None:
            weight = n if lanes is None else len(lanes)
            for ins in block.instrs:
                counter[ins.op] += weight

        # phis read their incoming values in parallel before anything else
        phi_writes = []
        body_start = 0
        for ins in block.instrs:
            if ins.op != "phi":
                break
            body_start += 1
            chosen = None
            for label, op in ins.incoming:
                if label == pred:
                    chosen = op
                    break
            if chosen is None:
                raise InterpreterError(f"phi %{ins.vid} has no edge from {pred!r}")
            value = resolve(chosen, lanes)
            if lanes is None and isinstance(value, np.ndarray):
                value = value.copy()  # never alias another value's storage
            phi_writes.append((ins.vid, value))
        for vid, value in phi_writes:
            store(vid, value, lanes)

        terminated = False
        for ins in block.instrs[body_start:]:
            op = ins.op
            if op == "br":
                queue.append((index[ins.labels[0]], lanes, block.label))
                terminated = True
            elif op == "condbr":
                predv = resolve(ins.args[0], lanes)
                t_label, f_label = ins.labels
                if lanes is None:
                    base = np.arange(n)
                    taken = base[predv]
                    fallen = base[~predv]
                else:
                    taken = lanes[predv]
                    fallen = lanes[~predv]
                if taken.size == n:
                    queue.append((index[t_label], None, block.label))
                elif taken.size:
                    queue.append((index[t_label], taken, block.label))
                if fallen.size == n:
                    queue.append((index[f_label], None, block.label))
                elif fallen.size:
                    queue.append((index[f_label], fallen, block.label))
                terminated = True
            elif op == "ret":
                value = resolve(ins.args[0], lanes)
                if lanes is None:
                    result[:] = value
                    done[:] = True
                else:
                    result[lanes] = value
                    done[lanes] = True
                terminated = True
            else:
                value = _execute(ins, resolve, lanes, tables, data, prog, n)
                store(ins.vid, value, lanes)
        if not terminated:  # verified programs always terminate blocks
            raise InterpreterError(f"block {block.label} fell through")

    if not done.all():
        raise InterpreterError("some lanes never reached ret")
    return result


def _materialize(value, n):
    arr = np.asarray(value)
    if arr.shape == ():
        return np.full(n, arr[()], dtype=arr.dtype)
    return arr


def _execute(ins: Instr, resolve, lanes, tables, data, prog, n):
    op = ins.op
    a = ins.args
    if op == "fadd":
        return resolve(a[0], lanes) + resolve(a[1], lanes)
    if op == "fsub":
        return resolve(a[0], lanes) - resolve(a[1], lanes)
    if op == "fmul":
        return resolve(a[0], lanes) * resolve(a[1], lanes)
    if op == "fdiv":
        return resolve(a[0], lanes) / resolve(a[1], lanes)
    if op == "fneg":
        return -resolve(a[0], lanes)
    if op == "fcmp_olt":
        return resolve(a[0], lanes) < resolve(a[1], lanes)
    if op == "fcmp_oge":
        return resolve(a[0], lanes) >= resolve(a[1], lanes)
    if op == "fcmp_oeq":
        return resolve(a[0], lanes) == resolve(a[1], lanes)
    if op == "icmp_eq":
        return resolve(a[0], lanes) == resolve(a[1], lanes)
    if op == "icmp_slt":
        return resolve(a[0], lanes) < resolve(a[1], lanes)
    if op == "select":
        return np.where(resolve(a[0], lanes), resolve(a[1], lanes), resolve(a[2], lanes))
    if op == "and":
        return resolve(a[0], lanes) & resolve(a[1], lanes)
    if op == "or":
        return resolve(a[0], lanes) | resolve(a[1], lanes)
    if op == "shl":
        return resolve(a[0], lanes) << resolve(a[1], lanes)
    if op == "iadd":
        return resolve(a[0], lanes) + resolve(a[1], lanes)
    if op == "imul":
        return resolve(a[0], lanes) * resolve(a[1], lanes)
    if op == "urem":
        return resolve(a[0], lanes) % resolve(a[1], lanes)
    if op == "zext":
        return np.asarray(resolve(a[0], lanes)).astype(np.int64)
    if op == "sitofp":
        return np.asarray(resolve(a[0], lanes)).astype(prog.dtype)
    if op == "fptosi_floor":
        return np.floor(resolve(a[0], lanes)).astype(np.int64)
    if op == "fptosi_round":
        # round half away from zero, matching the llvm.round intrinsic
        v = resolve(a[0], lanes)
        return np.where(v >= 0, np.floor(v + 0.5), np.ceil(v - 0.5)).astype(np.int64)
    if op == "table_load":
        tbl = tables[ins.table]
        idx = np.asarray(resolve(a[0], lanes))
        if idx.size and (int(idx.min()) < 0 or int(idx.max()) >= tbl.shape[0]):
            raise InterpreterError(
                f"table {ins.table!r} index out of bounds "
                f"(range {int(idx.min())}..{int(idx.max())}, size {tbl.shape[0]}): "
                "this usually signals a sigma misconfiguration"
            )
        return tbl[idx]
    if op == "data_fetch":
        coset = a[0]
        coords = [np.asarray(resolve(c, lanes)) for c in a[1:]]
        if isinstance(coset, Ref):
            cvals = np.asarray(resolve(coset, lanes))
            if cvals.shape == ():
                return _checked_fetch(data, int(cvals), coords, prog)
            out = None
            for cv in np.unique(cvals):
                mask = cvals == cv
                sub = [c[mask] if c.shape else c for c in coords]
                got = _checked_fetch(data, int(cv), sub, prog)
                if out is None:
                    out = np.zeros(cvals.shape, dtype=np.asarray(got).dtype)
                out[mask] = got
            return out
        return _checked_fetch(data, int(coset), coords, prog)
    raise InterpreterError(f"unknown op {op!r}")


def _checked_fetch(data, coset, coords, prog):
    if not 0 <= coset < data.ncosets:
        raise InterpreterError(f"coset index {coset} out of range")
    return data.fetch(coset, coords)


def interpret(prog: IrProgram, x, data, max_steps: int = DEFAULT_BUDGET) -> float:
    """Evaluate the program at a single point; float64/float32 semantics."""
    xs = np.asarray([list(x)], dtype=prog.dtype)
    return float(interpret_batch(prog, xs, data, max_steps=max_steps)[0])


def count_ops(prog: IrProgram) -> Counter:
    """Static instruction mix of a program."""
    c: Counter = Counter()
    for ins in prog.instructions():
        c[ins.op] += 1
    return c


def value_types(prog: IrProgram) -> dict[int, str]:
    """Type of every value id ('f', 'i' or 'b') for a verified program."""
    def_site: dict[int, tuple[int, int]] = {d: (-1, d) for d in range(prog.dim)}
    for bi, block in enumerate(prog.blocks):
        for ii, ins in enumerate(block.instrs):
            if ins.vid is not None:
                def_site[ins.vid] = (bi, ii)
    return _infer_types(prog, def_site)
