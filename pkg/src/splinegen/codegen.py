"""Lowering of a spline space into an SSA evaluation program.

The generated function follows the branch-free evaluation recipe: per coset,
shift the point into the reference region of evaluation, classify the
sub-region with BSP plane tests and a compressed lookup, load the per
sub-region transform and stencil, then run the pipelined fetch/compute
schedule over the reference polynomial chunks.  In `predicated` mode every
reference polynomial is evaluated and the live one is chosen with selects;
in `branchy` mode a compare chain picks exactly one polynomial body.

Tables with a single distinct entry are never materialized; the entry is
inlined and folded into the instruction stream (identity transforms and zero
shifts disappear entirely).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exact
from .ir import Builder, IrProgram, Ref
from .model import PARALLELEPIPED, ROUND_NEAREST, SplineSpace, validate_space
from .poly import Add, ChunkSet, Const, Sym, Var, group_polynomial, horner_factorize
from .schedule import (
    COMPUTE,
    FETCH,
    PREDICATED,
    EvalPlan,
    ScheduleParams,
    schedule_pipeline,
)

F64 = "f64"
F32 = "f32"


@dataclass(frozen=True)
class GenConfig:
    params: ScheduleParams
    float_width: str = F64
    unroll_cosets: bool = True

    def __post_init__(self):
        if self.float_width not in (F64, F32):
            raise ValueError(f"float width must be f64 or f32, not {self.float_width!r}")


@dataclass(frozen=True)
class TableSet:
    """Which lookup tables were materialized, and the inlined singletons."""

    sigma: str | None = None
    sigma_inline: int | None = None
    transform: str | None = None
    transform_inline: tuple | None = None  # s*s floats, row major
    tshift: str | None = None
    tshift_inline: tuple | None = None  # s floats
    stencil: str | None = None
    stencil_inline: tuple | None = None  # n sites of s ints
    psi: str | None = None
    psi_inline: int | None = None
    cosets: str | None = None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(
            n for n in (self.sigma, self.transform, self.tshift, self.stencil,
                        self.psi, self.cosets) if n
        )


def chunk_sets_for(space: SplineSpace, group_size: int) -> list[ChunkSet]:
    """One chunk set per reference polynomial, in stencil visiting order."""
    visit = range(space.stencil_size)
    return [group_polynomial(rp.poly, group_size, visit) for rp in space.ref_polys]


def plans_for(space: SplineSpace, params: ScheduleParams) -> list[EvalPlan]:
    """One evaluation plan per sub-region (all structurally identical)."""
    sets = chunk_sets_for(space, params.group_size)
    return [schedule_pipeline(sets[sub.psi_index], params) for sub in space.subregions]


class Codegen:
    """Stateful lowering context; drive the gen_* fragments or `run`."""

    def __init__(self, space: SplineSpace, config: GenConfig, builder: Builder | None = None):
        errors = [d for d in validate_space(space) if d.severity == "error"]
        if errors:
            raise ValueError(f"space is not valid: {errors[0]}")
        self.space = space
        self.config = config
        self.b = builder or Builder(
            "reconstruct",
            space.dim,
            ncosets=space.ncosets,
            float_width=config.float_width,
            source=space.name,
        )
        self.tables: TableSet | None = None
        self._load_cache: dict = {}

    # -- preamble -----------------------------------------------------------------

    def gen_preamble(self) -> TableSet:
        """Declare the constant tables; single-entry tables are inlined."""
        space = self.space
        fields: dict = {}

        sigma_vals = [int(v) for v in space.indexer.sigma]
        if len(set(sigma_vals)) > 1:
            fields["sigma"] = self.b.add_table("sigma", "int", sigma_vals)
        else:
            fields["sigma_inline"] = sigma_vals[0] if sigma_vals else 0

        t_entries = [
            tuple(float(q) for row in sub.transform for q in row) for sub in space.subregions
        ]
        if len(set(t_entries)) > 1:
            flat = [v for entry in t_entries for v in entry]
            fields["transform"] = self.b.add_table("transform", "float", flat)
        else:
            fields["transform_inline"] = t_entries[0]

        tp_entries = []
        for sub in space.subregions:
            shifted = exact.vec_neg(exact.mat_vec(sub.transform, sub.shift))
            tp_entries.append(tuple(float(q) for q in shifted))
        if len(set(tp_entries)) > 1:
            flat = [v for entry in tp_entries for v in entry]
            fields["tshift"] = self.b.add_table("tshift", "float", flat)
        else:
            fields["tshift_inline"] = tp_entries[0]

        pi_entries = [tuple(tuple(int(v) for v in site) for site in sub.stencil)
                      for sub in space.subregions]
        if len(set(pi_entries)) > 1:
            flat = [v for entry in pi_entries for site in entry for v in site]
            fields["stencil"] = self.b.add_table("stencil", "int", flat)
        else:
            fields["stencil_inline"] = pi_entries[0]

        psi_vals = [sub.psi_index for sub in space.subregions]
        if len(set(psi_vals)) > 1:
            fields["psi"] = self.b.add_table("psi", "int", psi_vals)
        else:
            fields["psi_inline"] = psi_vals[0]

        if space.ncosets > 1 and not self.config.unroll_cosets:
            flat = [float(q) for coset in space.lattice.cosets for q in coset]
            fields["cosets"] = self.b.add_table("cosets", "float", flat)

        self.tables = TableSet(**fields)
        return self.tables

    # -- small emission helpers ------------------------------------------------------

    def _fdot(self, coeffs, values):
        """Emit sum(coeffs[e] * values[e]) with exact constants folded."""
        acc = None
        for q, v in zip(coeffs, values):
            if q == 0:
                continue
            term = v if q == 1 else self.b.emit("fmul", v, float(q))
            acc = term if acc is None else self.b.emit("fadd", acc, term)
        return 0.0 if acc is None else acc

    def _load(self, table: str, sub, stride: int, offset: int, key):
        """Indexed table load; cached unless refetch_tables asks for reloads."""
        refetch = self.config.params.refetch_tables
        if not refetch and key in self._load_cache:
            return self._load_cache[key]
        if isinstance(sub, int):
            idx = sub * stride + offset
        else:
            base_key = ("base", table, stride)
            if not refetch and base_key in self._load_cache:
                base = self._load_cache[base_key]
            else:
                base = self.b.emit("imul", sub, stride) if stride != 1 else sub
                self._load_cache[base_key] = base
            idx = self.b.emit("iadd", base, offset) if offset else base
        value = self.b.emit("table_load", idx, table=table)
        self._load_cache[key] = value
        return value

    # -- region of evaluation -----------------------------------------------------------

    def gen_rho(self, xl):
        """Shift to the reference region: returns (k int refs, local x refs)."""
        space = self.space
        s = space.dim
        rm = space.region_map
        if rm.shape == PARALLELEPIPED:
            basis = rm.basis
            rounding = rm.rounding
        else:
            # Voronoi cell of the per-coset grid: per-axis nearest site.
            basis = exact.mat_identity(s)
            rounding = ROUND_NEAREST
        op = "fptosi_round" if rounding == ROUND_NEAREST else "fptosi_floor"

        if exact.is_identity_mat(basis):
            r = [self.b.emit(op, xl[d]) for d in range(s)]
            k = r
        else:
            inv = exact.mat_inv(basis)
            u = [self._fdot(inv[d], xl) for d in range(s)]
            r = [self.b.emit(op, u[d]) for d in range(s)]
            k = []
            for d in range(s):
                acc = None
                for e in range(s):
                    q = basis[d][e]
                    if q == 0:
                        continue
                    term = r[e] if q == 1 else self.b.emit("imul", r[e], int(q))
                    acc = term if acc is None else self.b.emit("iadd", acc, term)
                k.append(0 if acc is None else acc)

        xs = []
        for d in range(s):
            kf = self.b.emit("sitofp", k[d])
            xs.append(self.b.emit("fsub", xl[d], kf))
        return k, xs

    # -- sub-region membership ------------------------------------------------------------

    def gen_membership(self, xs):
        """BSP plane tests, bit packing, compression and the sigma lookup."""
        space = self.space
        q_bits = space.nplanes
        if q_bits == 0:
            sub = 0
        else:
            q = None
            for i, plane in enumerate(space.planes):
                dot = self._fdot(plane.normal, xs)
                pred = self.b.emit("fcmp_oge", dot, float(plane.offset))
                bit = self.b.emit("zext", pred)
                shifted = self.b.emit("shl", bit, i) if i else bit
                q = shifted if q is None else self.b.emit("or", q, shifted)
            p = space.indexer.modulus
            if 2**q_bits > p:
                q = self.b.emit("urem", q, p)
            sub = q
        if self.tables.sigma is None:
            return self.tables.sigma_inline if q_bits else 0
        return self.b.emit("table_load", sub, table=self.tables.sigma)

    # -- table lookups used by the evaluation ----------------------------------------------

    def _transform_entry(self, sub, d, e):
        t = self.tables
        if t.transform is None:
            return t.transform_inline[d * self.space.dim + e]
        s = self.space.dim
        return self._load(t.transform, sub, s * s, d * s + e, ("T", d, e))

    def _tshift_entry(self, sub, d):
        t = self.tables
        if t.tshift is None:
            return t.tshift_inline[d]
        return self._load(t.tshift, sub, self.space.dim, d, ("tp", d))

    def _stencil_entry(self, sub, j, d):
        t = self.tables
        if t.stencil is None:
            return t.stencil_inline[j][d]
        s = self.space.dim
        n = self.space.stencil_size
        return self._load(t.stencil, sub, n * s, j * s + d, ("pi", j, d))

    def _psi_value(self, sub):
        t = self.tables
        if t.psi is None:
            return t.psi_inline
        return self._load(t.psi, sub, 1, 0, ("psi",))

    def _local_point(self, sub, xs):
        """u = T'(x - t), with t' = -T' t folded into the constant table."""
        s = self.space.dim
        t = self.tables
        u = []
        for d in range(s):
            if t.transform is None:
                row = t.transform_inline[d * s : (d + 1) * s]
                acc = self._fdot([Fraction(v) for v in row], xs)
            else:
                acc = None
                for e in range(s):
                    entry = self._transform_entry(sub, d, e)
                    term = self.b.emit("fmul", entry, xs[e])
                    acc = term if acc is None else self.b.emit("fadd", acc, term)
                if acc is None:
                    acc = 0.0
            tp = self._tshift_entry(sub, d)
            if isinstance(tp, Ref):
                acc = self.b.emit("fadd", acc, tp)
            elif tp != 0.0:
                acc = self.b.emit("fadd", acc, tp)
            u.append(acc)
        return u

    def _fetch_symbol(self, sub, coset, k, j):
        coords = []
        for d in range(self.space.dim):
            site = self._stencil_entry(sub, j, d)
            if isinstance(site, Ref):
                coords.append(self.b.emit("iadd", site, k[d]))
            elif site == 0:
                coords.append(k[d])
            else:
                coords.append(self.b.emit("iadd", k[d], site))
        return self.b.emit("data_fetch", coset, *coords)

    def _tree_value(self, node, u, c):
        if isinstance(node, Const):
            return float(node.value)
        if isinstance(node, Var):
            return u[node.index]
        if isinstance(node, Sym):
            return c[node.index]
        left = self._tree_value(node.left, u, c)
        right = self._tree_value(node.right, u, c)
        op = "fadd" if isinstance(node, Add) else "fmul"
        return self.b.emit(op, left, right)

    # -- dispatch plus scheduled evaluation ---------------------------------------------------

    def _run_plan(self, sub, coset, k, xs, plan: EvalPlan, trees, psis):
        """Walk one fetch/compute schedule and return the accumulated values.

        `psis` lists the reference polynomial indices evaluated along this
        path (all of them in predicated mode, exactly one per branchy arm).
        With refetch_tables the transformed point is rederived per chunk, so
        table entries are reloaded at each use instead of staying live.
        """
        refetch = self.config.params.refetch_tables
        c: dict[int, Ref] = {}
        acc: dict[int, Ref | float | None] = {i: None for i in psis}
        u = None
        for step in plan.steps:
            if step.kind == FETCH:
                c[step.index] = self._fetch_symbol(sub, coset, k, step.index)
            elif step.kind == COMPUTE:
                if u is None or refetch:
                    u = self._local_point(sub, xs)
                for i in psis:
                    tree = trees[i][step.index]
                    if tree is None:
                        continue
                    value = self._tree_value(tree, u, c)
                    acc[i] = value if acc[i] is None else self.b.emit("fadd", acc[i], value)
        return {i: (0.0 if v is None else v) for i, v in acc.items()}

    def gen_dispatch_and_eval(self, sub, coset, k, xs, plans: list[EvalPlan],
                              trees, prefix: str = ""):
        """Evaluate the reference polynomials and pick the live contribution."""
        space = self.space
        nref = space.nref
        plan = plans[0]
        assert all(p.steps == plan.steps for p in plans), "plans differ across sub-regions"
        mode = self.config.params.branch_mode

        if nref == 1:
            acc = self._run_plan(sub, coset, k, xs, plan, trees, [0])
            return acc[0]

        if mode == PREDICATED:
            acc = self._run_plan(sub, coset, k, xs, plan, trees, list(range(nref)))
            g = None
            for i in range(nref):
                pred = self.b.emit("icmp_eq", self._psi_value(sub), i)
                picked = self.b.emit("select", pred, acc[i], 0.0)
                g = picked if g is None else self.b.emit("fadd", g, picked)
            return g

        # branchy: compare chain over reference polynomial indices
        psi = self._psi_value(sub)
        join = f"{prefix}dispatch.join"
        arm_labels = [f"{prefix}dispatch.arm{i}" for i in range(nref)]
        test_labels = [f"{prefix}dispatch.test{i}" for i in range(1, nref - 1)]
        chain = test_labels + [arm_labels[nref - 1]]
        pred = self.b.emit("icmp_eq", psi, 0)
        self.b.emit("condbr", pred, labels=(arm_labels[0], chain[0]))
        for i, label in enumerate(test_labels, start=1):
            self.b.block(label)
            pred = self.b.emit("icmp_eq", self._psi_value(sub), i)
            self.b.emit("condbr", pred, labels=(arm_labels[i], chain[i]))
        incoming = []
        for i in range(nref):
            self.b.block(arm_labels[i])
            self._load_cache = {}  # loads cached inside one arm must not leak to another
            acc = self._run_plan(sub, coset, k, xs, plan, trees, [i])
            incoming.append((self.b.current_label, acc[i]))
            self.b.emit("br", labels=(join,))
        self.b.block(join)
        g = self.b.phi()
        self.b.set_incoming(g, incoming)
        return g

    # -- coset iteration skeleton ---------------------------------------------------------

    def gen_coset_loop(self):
        """Emit the per-coset iteration structure.

        Returns (iterations, finish): `iterations` lists one (coset operand,
        shifted point, label prefix) triple per body the caller must emit
        (unrolled mode repeats the body per coset; loop mode has a single
        body driven by the loop counter), and `finish` takes the per-body
        contributions, emits the accumulation and the return.
        """
        if self.tables is None:
            raise ValueError("gen_preamble must run before gen_coset_loop")
        space = self.space
        s = space.dim
        x = [self.b.param(d) for d in range(s)]
        ncosets = space.ncosets

        if ncosets == 1:
            def finish_single(gs):
                self.b.emit("ret", gs[0])

            return [(0, x, "")], finish_single

        if self.config.unroll_cosets:
            iterations = []
            for ci in range(ncosets):
                offsets = [float(q) for q in space.lattice.cosets[ci]]
                xl = [
                    x[d] if offsets[d] == 0.0 else self.b.emit("fsub", x[d], offsets[d])
                    for d in range(s)
                ]
                iterations.append((ci, xl, f"c{ci}."))

            def finish_unrolled(gs):
                f = gs[0]
                for g in gs[1:]:
                    f = self.b.emit("fadd", f, g)
                self.b.emit("ret", f)

            return iterations, finish_unrolled

        pre = self.b.current_label
        self.b.emit("br", labels=("coset.head",))
        self.b.block("coset.head")
        i = self.b.phi()
        facc = self.b.phi()
        base = self.b.emit("imul", i, s) if s != 1 else i
        xl = []
        for d in range(s):
            idx = self.b.emit("iadd", base, d) if d else base
            off = self.b.emit("table_load", idx, table=self.tables.cosets)
            xl.append(self.b.emit("fsub", x[d], off))

        def finish_loop(gs):
            fnext = self.b.emit("fadd", facc, gs[0])
            inext = self.b.emit("iadd", i, 1)
            latch = self.b.current_label
            more = self.b.emit("icmp_slt", inext, ncosets)
            self.b.emit("condbr", more, labels=("coset.head", "coset.exit"))
            self.b.set_incoming(i, [(pre, 0), (latch, inext)])
            self.b.set_incoming(facc, [(pre, 0.0), (latch, fnext)])
            self.b.block("coset.exit")
            self.b.emit("ret", fnext)

        return [(i, xl, "")], finish_loop

    # -- whole-function generation ------------------------------------------------------------

    def _coset_body(self, coset, xl, plans, trees, prefix: str):
        self._load_cache = {}
        k, xs = self.gen_rho(xl)
        sub = self.gen_membership(xs)
        return self.gen_dispatch_and_eval(sub, coset, k, xs, plans, trees, prefix)

    def run(self) -> IrProgram:
        space = self.space
        config = self.config
        sets = chunk_sets_for(space, config.params.group_size)
        trees = [
            [horner_factorize(poly) if poly else None for poly, _ in cs.chunks]
            for cs in sets
        ]
        plans = plans_for(space, config.params)

        self.b.block("entry")
        self.gen_preamble()
        iterations, finish = self.gen_coset_loop()
        contributions = [
            self._coset_body(coset, xl, plans, trees, prefix)
            for coset, xl, prefix in iterations
        ]
        finish(contributions)

        meta = {
            "group_size": str(config.params.group_size),
            "pipeline_depth": str(config.params.pipeline_depth),
            "branch_mode": config.params.branch_mode,
            "refetch_tables": str(config.params.refetch_tables).lower(),
            "unroll_cosets": str(config.unroll_cosets).lower(),
        }
        return self.b.finish(meta)


def generate(space: SplineSpace, config: GenConfig) -> IrProgram:
    """Generate and verify the evaluation program for a space."""
    return Codegen(space, config).run()
