"""Textual emission of generated programs as LLVM assembly (.ll).

The emitted module uses the classic typed-pointer syntax so that any
toolchain from the last several major releases can consume it.  Constant
tables live in address space 4, which asks GPU-style backends to place them
in constant memory and is simply flat memory elsewhere.  The function takes
the evaluation point plus one sample-array pointer and per-axis extents for
every coset; lattice fetches wrap periodically.

Float literals are printed as 16-digit IEEE hex so every value round-trips
bit exactly.  Emission is deterministic: the same program yields the same
bytes.

`validate_text` is a deliberately small re-parser for the emitted subset.
It is not a general LLVM parser; it exists so tests can confirm that every
generated module stays inside a grammar that external tools accept.
"""

from __future__ import annotations

import json
import re
import struct

import numpy as np

from .ir import IrProgram, Instr, Ref, value_types


def _float_literal(value: float, width: str) -> str:
    if width == "f32":
        value = float(np.float32(value))
    bits = struct.unpack(">Q", struct.pack(">d", float(value)))[0]
    return f"0x{bits:016X}"


def _int_table_elem(values) -> str:
    lo = min(values, default=0)
    hi = max(values, default=0)
    return "i8" if -128 <= lo and hi <= 127 else "i32"


class _Emitter:
    def __init__(self, prog: IrProgram):
        self.prog = prog
        self.ftype = "double" if prog.float_width == "f64" else "float"
        self.types = value_types(prog)
        self.lines: list[str] = []
        self.tmp = 0
        self.declares: set[str] = set()
        self.table_elem = {
            t.name: (self.ftype if t.kind == "float" else _int_table_elem(t.values))
            for t in prog.tables
        }

    def fresh(self) -> str:
        self.tmp += 1
        return f"%t{self.tmp}"

    def operand(self, op) -> str:
        if isinstance(op, Ref):
            if op.vid < self.prog.dim:
                return f"%x{op.vid}"  # function parameter
            return f"%v{op.vid}"
        if isinstance(op, float):
            return _float_literal(op, self.prog.float_width)
        return str(op)

    def otype(self, op) -> str:
        if isinstance(op, Ref):
            return self.types[op.vid]
        return "f" if isinstance(op, float) else "i"

    def ll_type(self, t: str) -> str:
        return {"f": self.ftype, "i": "i64", "b": "i1"}[t]

    # -- per-instruction lowering ---------------------------------------------

    def emit_instr(self, ins: Instr):
        op = ins.op
        name = f"%v{ins.vid}" if ins.vid is not None else None
        simple = {
            "fadd": "fadd", "fsub": "fsub", "fmul": "fmul", "fdiv": "fdiv",
            "iadd": "add", "imul": "mul", "urem": "urem",
            "and": "and", "or": "or", "shl": "shl",
        }
        if op in simple:
            t = self.ll_type(self.otype(ins.args[0]))
            self.lines.append(
                f"  {name} = {simple[op]} {t} {self.operand(ins.args[0])}, "
                f"{self.operand(ins.args[1])}"
            )
        elif op == "fneg":
            self.lines.append(f"  {name} = fneg {self.ftype} {self.operand(ins.args[0])}")
        elif op.startswith("fcmp_"):
            pred = op.split("_")[1]
            self.lines.append(
                f"  {name} = fcmp {pred} {self.ftype} {self.operand(ins.args[0])}, "
                f"{self.operand(ins.args[1])}"
            )
        elif op.startswith("icmp_"):
            pred = op.split("_")[1]
            self.lines.append(
                f"  {name} = icmp {pred} i64 {self.operand(ins.args[0])}, "
                f"{self.operand(ins.args[1])}"
            )
        elif op == "select":
            t = self.ll_type(self.otype(ins.args[1]))
            self.lines.append(
                f"  {name} = select i1 {self.operand(ins.args[0])}, "
                f"{t} {self.operand(ins.args[1])}, {t} {self.operand(ins.args[2])}"
            )
        elif op == "zext":
            self.lines.append(f"  {name} = zext i1 {self.operand(ins.args[0])} to i64")
        elif op == "sitofp":
            self.lines.append(
                f"  {name} = sitofp i64 {self.operand(ins.args[0])} to {self.ftype}"
            )
        elif op in ("fptosi_floor", "fptosi_round"):
            intrinsic = "floor" if op == "fptosi_floor" else "round"
            suffix = "f64" if self.prog.float_width == "f64" else "f32"
            self.declares.add(f"declare {self.ftype} @llvm.{intrinsic}.{suffix}({self.ftype})")
            rounded = self.fresh()
            self.lines.append(
                f"  {rounded} = call {self.ftype} @llvm.{intrinsic}.{suffix}"
                f"({self.ftype} {self.operand(ins.args[0])})"
            )
            self.lines.append(f"  {name} = fptosi {self.ftype} {rounded} to i64")
        elif op == "table_load":
            self.emit_table_load(ins, name)
        elif op == "data_fetch":
            self.emit_data_fetch(ins, name)
        elif op == "phi":
            t = self.ll_type(self.types[ins.vid])
            edges = ", ".join(
                f"[ {self.operand(v)}, %{label} ]" for label, v in ins.incoming
            )
            self.lines.append(f"  {name} = phi {t} {edges}")
        elif op == "br":
            self.lines.append(f"  br label %{ins.labels[0]}")
        elif op == "condbr":
            self.lines.append(
                f"  br i1 {self.operand(ins.args[0])}, "
                f"label %{ins.labels[0]}, label %{ins.labels[1]}"
            )
        elif op == "ret":
            self.lines.append(f"  ret {self.ftype} {self.operand(ins.args[0])}")
        else:
            raise ValueError(f"cannot emit op {op!r}")

    def emit_table_load(self, ins: Instr, name: str):
        table = self.prog.table(ins.table)
        elem = self.table_elem[ins.table]
        count = len(table.values)
        ptr = self.fresh()
        self.lines.append(
            f"  {ptr} = getelementptr inbounds [{count} x {elem}], "
            f"[{count} x {elem}] addrspace(4)* @{ins.table}, i64 0, "
            f"i64 {self.operand(ins.args[0])}"
        )
        if elem in ("i8", "i32"):
            raw = self.fresh()
            self.lines.append(f"  {raw} = load {elem}, {elem} addrspace(4)* {ptr}")
            self.lines.append(f"  {name} = sext {elem} {raw} to i64")
        else:
            self.lines.append(f"  {name} = load {elem}, {elem} addrspace(4)* {ptr}")

    def _coset_operand(self, coset, template: str):
        """Value of a per-coset parameter, via a select chain when dynamic."""
        if isinstance(coset, int):
            return template.format(coset)
        ty = f"{self.ftype}*" if template.startswith("%coset") else "i64"
        value = template.format(self.prog.ncosets - 1)
        for c in range(self.prog.ncosets - 2, -1, -1):
            pred = self.fresh()
            self.lines.append(
                f"  {pred} = icmp eq i64 {self.operand(coset)}, {c}"
            )
            merged = self.fresh()
            self.lines.append(
                f"  {merged} = select i1 {pred}, {ty} {template.format(c)}, {ty} {value}"
            )
            value = merged
        return value

    def emit_data_fetch(self, ins: Instr, name: str):
        coset = ins.args[0]
        coords = ins.args[1:]
        dim = self.prog.dim
        base = self._coset_operand(coset, "%coset{}")
        wrapped = []
        for d, c in enumerate(coords):
            ext = self._coset_operand(coset, f"%ext{{}}_{d}")
            r1 = self.fresh()
            self.lines.append(f"  {r1} = srem i64 {self.operand(c)}, {ext}")
            r2 = self.fresh()
            self.lines.append(f"  {r2} = add i64 {r1}, {ext}")
            r3 = self.fresh()
            self.lines.append(f"  {r3} = srem i64 {r2}, {ext}")
            wrapped.append((r3, ext))
        flat = wrapped[0][0]
        for d in range(1, dim):
            scaled = self.fresh()
            self.lines.append(f"  {scaled} = mul i64 {flat}, {wrapped[d][1]}")
            added = self.fresh()
            self.lines.append(f"  {added} = add i64 {scaled}, {wrapped[d][0]}")
            flat = added
        ptr = self.fresh()
        self.lines.append(
            f"  {ptr} = getelementptr inbounds {self.ftype}, {self.ftype}* {base}, i64 {flat}"
        )
        self.lines.append(f"  {name} = load {self.ftype}, {self.ftype}* {ptr}")

    # -- module assembly ---------------------------------------------------------

    def run(self) -> str:
        prog = self.prog
        header = [f"; {prog.name}: generated reconstruction kernel"]
        if prog.source:
            header.append(f"; spline space: {prog.source}")
        for key, value in prog.meta:
            header.append(f"; {key}: {value}")

        globals_: list[str] = []
        for t in prog.tables:
            elem = self.table_elem[t.name]
            if t.kind == "float":
                body = ", ".join(
                    f"{elem} {_float_literal(v, prog.float_width)}" for v in t.values
                )
            else:
                body = ", ".join(f"{elem} {int(v)}" for v in t.values)
            globals_.append(
                f"@{t.name} = addrspace(4) constant [{len(t.values)} x {elem}] [{body}]"
            )

        params = [f"{self.ftype} %x{d}" for d in range(prog.dim)]
        for c in range(prog.ncosets):
            params.append(f"{self.ftype}* %coset{c}")
            params += [f"i64 %ext{c}_{d}" for d in range(prog.dim)]
        define = f"define {self.ftype} @reconstruct({', '.join(params)}) {{"

        for block in prog.blocks:
            self.lines.append(f"{block.label}:")
            for ins in block.instrs:
                self.emit_instr(ins)
        self.lines.append("}")
        body = "\n".join(self.lines)

        parts = header + [""]
        if globals_:
            parts += globals_ + [""]
        if self.declares:
            parts += sorted(self.declares) + [""]
        parts.append(define)
        parts.append(body)
        return "\n".join(parts) + "\n"


def emit_text(prog: IrProgram) -> str:
    """Emit the program as LLVM assembly text; byte deterministic."""
    return _Emitter(prog).run()


def build_manifest(prog: IrProgram) -> dict:
    """Provenance sidecar for an emitted kernel."""
    doc = {"spline": prog.source or prog.name, "function": "reconstruct",
           "float_width": prog.float_width, "dim": prog.dim, "cosets": prog.ncosets}
    doc.update({k: v for k, v in prog.meta})
    return doc


def manifest_text(prog: IrProgram) -> str:
    return json.dumps(build_manifest(prog), indent=2, sort_keys=True) + "\n"


# -- grammar validation ----------------------------------------------------------------

_TYPES = r"(?:double|float|i64|i32|i8|i1)"
_PTR = rf"{_TYPES}(?: addrspace\(4\))?\*"
_NAME = r"%[A-Za-z0-9._]+"
_FLOAT_LIT = r"0x[0-9A-F]{16}"
_INT_LIT = r"-?\d+"
_VALUE = rf"(?:{_NAME}|{_FLOAT_LIT}|{_INT_LIT})"

_LINE_PATTERNS = [
    re.compile(rf"^({_NAME}) = (?:fadd|fsub|fmul|fdiv) (?:double|float) ({_VALUE}), ({_VALUE})$"),
    re.compile(rf"^({_NAME}) = fneg (?:double|float) ({_VALUE})$"),
    re.compile(rf"^({_NAME}) = (?:add|mul|and|or|shl|srem|urem) i64 ({_VALUE}), ({_VALUE})$"),
    re.compile(rf"^({_NAME}) = fcmp (?:olt|oge|oeq) (?:double|float) ({_VALUE}), ({_VALUE})$"),
    re.compile(rf"^({_NAME}) = icmp (?:eq|slt) i64 ({_VALUE}), ({_VALUE})$"),
    re.compile(
        rf"^({_NAME}) = select i1 ({_VALUE}), ((?:{_TYPES}|{_PTR})) ({_VALUE}), "
        rf"(?:{_TYPES}|{_PTR}) ({_VALUE})$"
    ),
    re.compile(rf"^({_NAME}) = zext (?:i1|i8|i32) ({_VALUE}) to i64$"),
    re.compile(rf"^({_NAME}) = sext (?:i8|i32) ({_VALUE}) to i64$"),
    re.compile(rf"^({_NAME}) = sitofp i64 ({_VALUE}) to (?:double|float)$"),
    re.compile(rf"^({_NAME}) = fptosi (?:double|float) ({_VALUE}) to i64$"),
    re.compile(
        rf"^({_NAME}) = call (?:double|float) @llvm\.(?:floor|round)\.f(?:32|64)"
        rf"\((?:double|float) ({_VALUE})\)$"
    ),
    re.compile(
        rf"^({_NAME}) = getelementptr inbounds \[\d+ x {_TYPES}\], "
        rf"\[\d+ x {_TYPES}\] addrspace\(4\)\* (@[A-Za-z0-9._]+), i64 0, i64 ({_VALUE})$"
    ),
    re.compile(
        rf"^({_NAME}) = getelementptr inbounds (?:double|float), "
        rf"(?:double|float)\* ({_VALUE}), i64 ({_VALUE})$"
    ),
    re.compile(rf"^({_NAME}) = load {_TYPES}, {_PTR} ({_NAME})$"),
    # matched after label references are replaced by the <l> placeholder
    re.compile(rf"^({_NAME}) = phi (?:{_TYPES})((?: \[ {_VALUE}, <l> \],?)+)$"),
]

_TERMINATOR_PATTERNS = [
    re.compile(rf"^ret (?:double|float) ({_VALUE})$"),
    re.compile(r"^br label <l>$"),
    re.compile(rf"^br i1 ({_VALUE}), label <l>, label <l>$"),
]

_GLOBAL_RE = re.compile(
    rf"^@[A-Za-z0-9._]+ = addrspace\(4\) constant \[(\d+) x ({_TYPES})\] "
    rf"\[((?:{_TYPES} (?:{_FLOAT_LIT}|{_INT_LIT})(?:, )?)+)\]$"
)
_DECLARE_RE = re.compile(
    rf"^declare (?:double|float) @llvm\.[a-z0-9.]+\((?:double|float)(?:, (?:double|float))*\)$"
)
_DEFINE_RE = re.compile(
    rf"^define (double|float) @([A-Za-z0-9._]+)\(((?:(?:{_TYPES}|{_PTR}) %[A-Za-z0-9._]+(?:, )?)*)\) \{{$"
)
_LABEL_RE = re.compile(r"^([A-Za-z0-9._]+):$")


def _strip_label_refs(line: str, label_refs: set[str]) -> str:
    """Record label references and remove them so they do not read as values."""

    def _branch(m):
        label_refs.add(m.group(1))
        return "label <l>"

    def _edge(m):
        label_refs.add(m.group(2))
        return f"[ {m.group(1)}, <l> ]"

    line = re.sub(r"label %([A-Za-z0-9._]+)", _branch, line)
    line = re.sub(r"\[ ([^,\]]+), %([A-Za-z0-9._]+) \]", _edge, line)
    return line


def validate_text(text: str) -> list[str]:
    """Re-parse emitted assembly; returns a list of violations (empty = ok)."""
    problems: list[str] = []
    defined: set[str] = set()
    used: set[str] = set()
    labels: set[str] = set()
    label_refs: set[str] = set()
    in_function = False
    saw_define = False

    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue

        if not in_function:
            m = _GLOBAL_RE.match(line)
            if m:
                if int(m.group(1)) != len(m.group(3).split(", ")):
                    problems.append(f"line {no}: array length does not match elements")
                continue
            if _DECLARE_RE.match(line):
                continue
            m = _DEFINE_RE.match(line)
            if m:
                if saw_define:
                    problems.append(f"line {no}: more than one function definition")
                saw_define = True
                in_function = True
                for piece in filter(None, m.group(3).split(", ")):
                    defined.add(piece.split()[-1])
                continue
            problems.append(f"line {no}: unrecognized top-level construct: {line!r}")
            continue

        if line == "}":
            in_function = False
            continue
        m = _LABEL_RE.match(line)
        if m:
            if m.group(1) in labels:
                problems.append(f"line {no}: duplicate label {m.group(1)!r}")
            labels.add(m.group(1))
            continue

        cleaned = _strip_label_refs(line, label_refs)
        matched = False
        for pat in _LINE_PATTERNS:
            m = pat.match(cleaned)
            if m:
                name = m.group(1)
                if name in defined:
                    problems.append(f"line {no}: {name} assigned more than once")
                defined.add(name)
                for ref in re.finditer(_NAME, cleaned[len(name) + 3 :]):
                    used.add(ref.group(0))
                matched = True
                break
        if not matched:
            for pat in _TERMINATOR_PATTERNS:
                if pat.match(cleaned):
                    for ref in re.finditer(_NAME, cleaned):
                        used.add(ref.group(0))
                    matched = True
                    break
        if not matched:
            problems.append(f"line {no}: unrecognized instruction: {line!r}")

    if not saw_define:
        problems.append("no function definition found")
    if in_function:
        problems.append("unbalanced braces")
    for name in sorted(used - defined):
        problems.append(f"value {name} is used but never defined")
    for label in sorted(label_refs - labels):
        problems.append(f"label {label!r} is referenced but never defined")
    return problems
