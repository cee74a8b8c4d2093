"""Sparse multivariate polynomial algebra over exact rationals.

A polynomial lives over s spatial variables x_0..x_{s-1} plus optional
coefficient symbols c_j (one per stencil site).  Reconstruction is linear in
the data, so every monomial carries at most one c symbol with exponent one.
A term is keyed by (x-exponent tuple, c_index), where c_index == -1 means
"no coefficient symbol".  Coefficients are Fractions and zero terms are
never stored.

The module also provides the two transformations the code generator relies
on: greedy multivariate Horner factorization and decomposition of a
polynomial into coefficient groups of bounded size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

NO_SYMBOL = -1

TermKey = tuple[tuple[int, ...], int]


def _term_sort_key(key: TermKey):
    return (key[0], key[1])


class Poly:
    """Immutable-by-convention sparse polynomial."""

    __slots__ = ("dim", "terms", "_sorted")

    def __init__(self, dim: int, terms: Mapping[TermKey, Fraction] | None = None):
        self.dim = dim
        clean: dict[TermKey, Fraction] = {}
        for (exps, c_index), coeff in (terms or {}).items():
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim:
                raise ValueError(f"exponent vector {exps} does not have length {dim}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            clean[(exps, int(c_index))] = coeff
        self.terms = clean
        self._sorted = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value) -> "Poly":
        return cls(dim, {((0,) * dim, NO_SYMBOL): Fraction(value)})

    @classmethod
    def variable(cls, dim: int, k: int) -> "Poly":
        exps = tuple(1 if i == k else 0 for i in range(dim))
        return cls(dim, {(exps, NO_SYMBOL): Fraction(1)})

    @classmethod
    def symbol(cls, dim: int, j: int) -> "Poly":
        return cls(dim, {((0,) * dim, j): Fraction(1)})

    # -- basic algebra -------------------------------------------------------

    def sorted_terms(self) -> list[tuple[TermKey, Fraction]]:
        if self._sorted is None:
            self._sorted = sorted(self.terms.items(), key=lambda kv: _term_sort_key(kv[0]))
        return self._sorted

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            out[key] = out.get(key, Fraction(0)) + coeff
        return Poly(self.dim, out)

    def __sub__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            out[key] = out.get(key, Fraction(0)) - coeff
        return Poly(self.dim, out)

    def __neg__(self) -> "Poly":
        return self.scale(-1)

    def scale(self, factor) -> "Poly":
        f = Fraction(factor)
        return Poly(self.dim, {k: c * f for k, c in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[TermKey, Fraction] = {}
        for (ea, ca), qa in self.terms.items():
            for (eb, cb), qb in other.terms.items():
                if ca != NO_SYMBOL and cb != NO_SYMBOL:
                    raise ValueError("product would be nonlinear in coefficient symbols")
                key = (tuple(x + y for x, y in zip(ea, eb)), ca if ca != NO_SYMBOL else cb)
                out[key] = out.get(key, Fraction(0)) + qa * qb
        return Poly(self.dim, out)

    def symbols(self) -> set[int]:
        return {c for (_, c) in self.terms if c != NO_SYMBOL}

    def degree(self) -> int:
        return max((sum(e) for (e, _) in self.terms), default=0)

    def __repr__(self) -> str:
        if not self.terms:
            return "Poly(0)"
        parts = []
        for (exps, c), coeff in self.sorted_terms():
            factors = [str(coeff)]
            factors += [f"x{k}^{e}" if e > 1 else f"x{k}" for k, e in enumerate(exps) if e]
            if c != NO_SYMBOL:
                factors.append(f"c{c}")
            parts.append("*".join(factors))
        return "Poly(" + " + ".join(parts) + ")"

    # -- evaluation ----------------------------------------------------------

    def eval(self, x, c=()) -> float:
        """Evaluate with float semantics, accumulating terms in sorted order.

        `x` is a sequence of s floats (or numpy arrays of equal shape, in
        which case the result is an array); `c` maps symbol index to value.
        """
        total = 0.0
        for (exps, ci), coeff in self.sorted_terms():
            term = float(coeff)
            for k, e in enumerate(exps):
                if e:
                    term = term * x[k] ** e
            if ci != NO_SYMBOL:
                term = term * c[ci]
            total = total + term
        return total

    def eval_exact(self, x: Iterable, c: Iterable = ()) -> Fraction:
        """Evaluate in exact rational arithmetic."""
        xs = [Fraction(v) for v in x]
        cs = [Fraction(v) for v in c]
        total = Fraction(0)
        for (exps, ci), coeff in self.sorted_terms():
            term = coeff
            for k, e in enumerate(exps):
                if e:
                    term *= xs[k] ** e
            if ci != NO_SYMBOL:
                term *= cs[ci]
            total += term
        return total

    # -- calculus and substitution --------------------------------------------

    def differentiate(self, axis: int) -> "Poly":
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        out: dict[TermKey, Fraction] = {}
        for (exps, ci), coeff in self.terms.items():
            e = exps[axis]
            if e == 0:
                continue
            new = tuple(v - 1 if k == axis else v for k, v in enumerate(exps))
            out[(new, ci)] = out.get((new, ci), Fraction(0)) + coeff * e
        return Poly(self.dim, out)

    def substitute_affine(self, a, b) -> "Poly":
        """Substitute x -> A*y + b exactly (A: s x s rationals, b: s rationals)."""
        axis_polys = []
        for d in range(self.dim):
            p = Poly.constant(self.dim, b[d])
            for e in range(self.dim):
                if a[d][e] != 0:
                    p = p + Poly.variable(self.dim, e).scale(a[d][e])
            axis_polys.append(p)
        out = Poly.zero(self.dim)
        for (exps, ci), coeff in self.sorted_terms():
            term = Poly.constant(self.dim, coeff)
            for k, e in enumerate(exps):
                for _ in range(e):
                    term = term * axis_polys[k]
            if ci != NO_SYMBOL:
                term = term * Poly.symbol(self.dim, ci)
            out = out + term
        return out


def poly_eval(p: Poly, x, c=()) -> float:
    return p.eval(x, c)


def differentiate(p: Poly, axis: int) -> Poly:
    return p.differentiate(axis)


# -- Horner factorization ------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Sym:
    index: int


@dataclass(frozen=True)
class Add:
    left: "HornerNode"
    right: "HornerNode"


@dataclass(frozen=True)
class Mul:
    left: "HornerNode"
    right: "HornerNode"


HornerNode = Const | Var | Sym | Add | Mul


def _monomial_node(exps: tuple[int, ...], ci: int, coeff: Fraction) -> HornerNode:
    node: HornerNode | None = None if coeff == 1 else Const(coeff)
    for k, e in enumerate(exps):
        for _ in range(e):
            v = Var(k)
            node = v if node is None else Mul(node, v)
    if ci != NO_SYMBOL:
        s = Sym(ci)
        node = s if node is None else Mul(node, s)
    return Const(coeff) if node is None else node


def _occurrence_counts(terms: list[tuple[TermKey, Fraction]]):
    xs: dict[int, int] = {}
    cs: dict[int, int] = {}
    for (exps, ci), _ in terms:
        for k, e in enumerate(exps):
            if e:
                xs[k] = xs.get(k, 0) + 1
        if ci != NO_SYMBOL:
            cs[ci] = cs.get(ci, 0) + 1
    return xs, cs


def _factor(terms: list[tuple[TermKey, Fraction]], dim: int) -> HornerNode:
    if not terms:
        return Const(Fraction(0))
    if len(terms) == 1:
        (exps, ci), coeff = terms[0]
        return _monomial_node(exps, ci, coeff)
    xs, cs = _occurrence_counts(terms)
    # Greedy choice: the variable present in the most terms wins; ties go to
    # the lowest index, with spatial variables preferred over symbols.
    candidates = [(-n, 0, k) for k, n in xs.items()] + [(-n, 1, j) for j, n in cs.items()]
    candidates.sort()
    best_neg, kind, idx = candidates[0]
    if -best_neg <= 1:
        node = None
        for (exps, ci), coeff in terms:
            mono = _monomial_node(exps, ci, coeff)
            node = mono if node is None else Add(node, mono)
        return node
    inner: list[tuple[TermKey, Fraction]] = []
    rest: list[tuple[TermKey, Fraction]] = []
    for (exps, ci), coeff in terms:
        if kind == 0 and exps[idx] > 0:
            reduced = tuple(e - 1 if k == idx else e for k, e in enumerate(exps))
            inner.append(((reduced, ci), coeff))
        elif kind == 1 and ci == idx:
            inner.append(((exps, NO_SYMBOL), coeff))
        else:
            rest.append(((exps, ci), coeff))
    var_node: HornerNode = Var(idx) if kind == 0 else Sym(idx)
    factored: HornerNode = Mul(_factor(inner, dim), var_node)
    if rest:
        factored = Add(factored, _factor(rest, dim))
    return factored


def horner_factorize(p: Poly) -> HornerNode:
    """Greedy multivariate Horner form; expanding it reproduces p exactly."""
    return _factor(p.sorted_terms(), p.dim)


def horner_eval(node: HornerNode, x, c=()) -> float:
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, Sym):
        return c[node.index]
    if isinstance(node, Add):
        return horner_eval(node.left, x, c) + horner_eval(node.right, x, c)
    return horner_eval(node.left, x, c) * horner_eval(node.right, x, c)


def expand_horner(node: HornerNode, dim: int) -> Poly:
    """Re-expand a Horner tree into a Poly (the fidelity oracle)."""
    if isinstance(node, Const):
        return Poly.constant(dim, node.value)
    if isinstance(node, Var):
        return Poly.variable(dim, node.index)
    if isinstance(node, Sym):
        return Poly.symbol(dim, node.index)
    if isinstance(node, Add):
        return expand_horner(node.left, dim) + expand_horner(node.right, dim)
    return expand_horner(node.left, dim) * expand_horner(node.right, dim)


# -- coefficient grouping ------------------------------------------------------


@dataclass(frozen=True)
class ChunkSet:
    """Decomposition of a polynomial into coefficient groups.

    `chunks[k]` is `(poly, block)` where `block` is the k-th run of at most
    `group_size` symbol indices in stencil visiting order.  The chunk
    polynomials sum to the source polynomial exactly; symbol-free terms live
    in chunk 0.
    """

    dim: int
    group_size: int
    chunks: tuple[tuple[Poly, tuple[int, ...]], ...]

    def __len__(self) -> int:
        return len(self.chunks)

    def total(self) -> Poly:
        out = Poly.zero(self.dim)
        for poly, _ in self.chunks:
            out = out + poly
        return out


def group_polynomial(p: Poly, m: int, visit_order: Iterable[int]) -> ChunkSet:
    """Split p into ceil(n/m) chunks of at most m coefficient symbols each."""
    if m < 1:
        raise ValueError("group size must be at least 1")
    order = [int(j) for j in visit_order]
    if sorted(order) != sorted(set(order)):
        raise ValueError("visit order contains duplicates")
    missing = p.symbols() - set(order)
    if missing:
        raise ValueError(f"visit order is missing symbols {sorted(missing)}")
    blocks = [tuple(order[i : i + m]) for i in range(0, len(order), m)] or [()]
    where = {j: k for k, block in enumerate(blocks) for j in block}
    buckets: list[dict[TermKey, Fraction]] = [{} for _ in blocks]
    for (exps, ci), coeff in p.sorted_terms():
        k = 0 if ci == NO_SYMBOL else where[ci]
        buckets[k][(exps, ci)] = coeff
    chunks = tuple((Poly(p.dim, b), block) for b, block in zip(buckets, blocks))
    return ChunkSet(dim=p.dim, group_size=m, chunks=chunks)
