"""Domain model of a shift-invariant spline reconstruction space.

The input is a single JSON document, the serialized output of an upstream
geometric analysis: a lattice (as Cartesian cosets), a region-of-evaluation
map, BSP planes that cut the region into sub-regions, a compressed
sub-region index table, per-sub-region affine transforms and fetch stencils,
and the reference polynomials.  Rationals are encoded as "num/den" strings
(plain integers allowed) so that values like 1/8 round-trip exactly.

All types are frozen dataclasses; a parsed space is immutable and safe to
share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from . import exact
from .exact import Mat, Vec
from .poly import NO_SYMBOL, Poly

UNREACHABLE = -1

PARALLELEPIPED = "parallelepiped"
VORONOI = "voronoi"
ROUND_NEAREST = "round_nearest"
FLOOR = "floor"


class SchemaError(ValueError):
    """The description file is structurally malformed at `path`."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.path}: {self.message}"


class InvariantError(ValueError):
    """A structurally valid description violates a space invariant."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        lines = "; ".join(str(d) for d in diagnostics)
        super().__init__(lines)


@dataclass(frozen=True)
class LatticeSpec:
    generator: Mat
    cosets: tuple[Vec, ...]

    @property
    def ncosets(self) -> int:
        return len(self.cosets)


@dataclass(frozen=True)
class RegionMap:
    shape: str
    rounding: str
    basis: Mat | None = None


@dataclass(frozen=True)
class BspPlane:
    normal: Vec
    offset: Fraction


@dataclass(frozen=True)
class SubRegionIndexer:
    modulus: int
    sigma: tuple[int, ...]


@dataclass(frozen=True)
class SubRegion:
    transform: Mat
    shift: Vec
    stencil: tuple[tuple[int, ...], ...]
    psi_index: int


@dataclass(frozen=True)
class RefPoly:
    poly: Poly


@dataclass(frozen=True)
class SplineSpace:
    name: str
    dim: int
    lattice: LatticeSpec
    region_map: RegionMap
    planes: tuple[BspPlane, ...]
    indexer: SubRegionIndexer
    subregions: tuple[SubRegion, ...]
    ref_polys: tuple[RefPoly, ...]

    @property
    def nplanes(self) -> int:
        return len(self.planes)

    @property
    def nsubregions(self) -> int:
        return len(self.subregions)

    @property
    def nref(self) -> int:
        return len(self.ref_polys)

    @property
    def ncosets(self) -> int:
        return self.lattice.ncosets

    @property
    def stencil_size(self) -> int:
        return len(self.subregions[0].stencil)


# -- parsing --------------------------------------------------------------------


def _want(mapping, key, kind, path):
    if not isinstance(mapping, dict):
        raise SchemaError(path, f"expected an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}.{key}" if path else key,
                          f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _rational(value, path) -> Fraction:
    try:
        return exact.parse_rational(value)
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def _rational_vec(values, path) -> Vec:
    if not isinstance(values, list):
        raise SchemaError(path, "expected a list")
    return tuple(_rational(v, f"{path}[{i}]") for i, v in enumerate(values))


def _rational_mat(rows, path) -> Mat:
    if not isinstance(rows, list) or not rows:
        raise SchemaError(path, "expected a non-empty list of rows")
    return tuple(_rational_vec(row, f"{path}[{i}]") for i, row in enumerate(rows))


def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _int_vec(values, path) -> tuple[int, ...]:
    if not isinstance(values, list):
        raise SchemaError(path, "expected a list")
    return tuple(_int(v, f"{path}[{i}]") for i, v in enumerate(values))


def _parse_poly(monomials, dim, path) -> Poly:
    if not isinstance(monomials, list):
        raise SchemaError(path, "expected a list of monomials")
    terms = {}
    for i, mono in enumerate(monomials):
        mpath = f"{path}[{i}]"
        coeff = _rational(_want(mono, "coeff", None, mpath), f"{mpath}.coeff")
        exps = _int_vec(_want(mono, "x_exps", list, mpath), f"{mpath}.x_exps")
        ci = _int(_want(mono, "c_index", None, mpath), f"{mpath}.c_index")
        if len(exps) != dim:
            raise SchemaError(f"{mpath}.x_exps", f"expected {dim} exponents, got {len(exps)}")
        if any(e < 0 for e in exps):
            raise SchemaError(f"{mpath}.x_exps", "negative exponent")
        if ci < NO_SYMBOL:
            raise SchemaError(f"{mpath}.c_index", f"bad symbol index {ci}")
        if coeff == 0:
            raise SchemaError(f"{mpath}.coeff", "zero coefficient is not stored")
        key = (exps, ci)
        if key in terms:
            raise SchemaError(mpath, "duplicate monomial")
        terms[key] = coeff
    return Poly(dim, terms)


def parse_space(text: str) -> SplineSpace:
    """Parse and fully validate a description file.

    Raises SchemaError for malformed documents and InvariantError when the
    parsed space violates a hard invariant.  Both name the offending path.
    """
    try:
        doc = json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as e:
        raise SchemaError("<document>", f"invalid JSON: {e}") from None
    space = _parse_document(doc)
    errors = [d for d in validate_space(space) if d.severity == "error"]
    if errors:
        raise InvariantError(errors)
    return space


def _reject_float(text):
    raise SchemaError("<document>", f"float literal {text} is not exact; use 'num/den'")


def _parse_document(doc) -> SplineSpace:
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "top level must be an object")
    name = doc.get("name", "unnamed")
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a non-empty string")
    dim = _int(_want(doc, "dim", None, ""), "dim")

    lat = _want(doc, "lattice", dict, "")
    generator = _rational_mat(_want(lat, "generator", list, "lattice"), "lattice.generator")
    cosets = _want(lat, "cosets", list, "lattice")
    coset_vecs = tuple(_rational_vec(c, f"lattice.cosets[{i}]") for i, c in enumerate(cosets))
    lattice = LatticeSpec(generator=generator, cosets=coset_vecs)

    rm = _want(doc, "region_map", dict, "")
    shape = _want(rm, "shape", str, "region_map")
    rounding = _want(rm, "rounding", str, "region_map")
    basis = None
    if shape == PARALLELEPIPED:
        basis = _rational_mat(_want(rm, "basis", list, "region_map"), "region_map.basis")
    elif "basis" in rm and rm["basis"] is not None:
        basis = _rational_mat(rm["basis"], "region_map.basis")
    region_map = RegionMap(shape=shape, rounding=rounding, basis=basis)

    planes = []
    for i, pl in enumerate(_want(doc, "planes", list, "")):
        ppath = f"planes[{i}]"
        normal = _rational_vec(_want(pl, "normal", list, ppath), f"{ppath}.normal")
        offset = _rational(_want(pl, "offset", None, ppath), f"{ppath}.offset")
        planes.append(BspPlane(normal=normal, offset=offset))

    idx = _want(doc, "indexer", dict, "")
    indexer = SubRegionIndexer(
        modulus=_int(_want(idx, "modulus", None, "indexer"), "indexer.modulus"),
        sigma=_int_vec(_want(idx, "sigma", list, "indexer"), "indexer.sigma"),
    )

    subregions = []
    for i, sub in enumerate(_want(doc, "subregions", list, "")):
        spath = f"subregions[{i}]"
        transform = _rational_mat(_want(sub, "transform", list, spath), f"{spath}.transform")
        shift = _rational_vec(_want(sub, "shift", list, spath), f"{spath}.shift")
        stencil_raw = _want(sub, "stencil", list, spath)
        stencil = tuple(
            _int_vec(site, f"{spath}.stencil[{j}]") for j, site in enumerate(stencil_raw)
        )
        psi_index = _int(_want(sub, "psi_index", None, spath), f"{spath}.psi_index")
        subregions.append(
            SubRegion(transform=transform, shift=shift, stencil=stencil, psi_index=psi_index)
        )

    ref_polys = []
    for i, monos in enumerate(_want(doc, "ref_polys", list, "")):
        ref_polys.append(RefPoly(poly=_parse_poly(monos, dim, f"ref_polys[{i}]")))

    return SplineSpace(
        name=name,
        dim=dim,
        lattice=lattice,
        region_map=region_map,
        planes=tuple(planes),
        indexer=indexer,
        subregions=tuple(subregions),
        ref_polys=tuple(ref_polys),
    )


# -- serialization ----------------------------------------------------------------


def _fmt_vec(v: Vec) -> list[str]:
    return [exact.format_rational(q) for q in v]


def _fmt_mat(m: Mat) -> list[list[str]]:
    return [_fmt_vec(row) for row in m]


def serialize_space(space: SplineSpace) -> str:
    """Canonical JSON for a space; parse_space(serialize_space(s)) == s."""
    doc = {
        "name": space.name,
        "dim": space.dim,
        "lattice": {
            "generator": _fmt_mat(space.lattice.generator),
            "cosets": [_fmt_vec(c) for c in space.lattice.cosets],
        },
        "region_map": {
            "shape": space.region_map.shape,
            "rounding": space.region_map.rounding,
        },
        "planes": [
            {"normal": _fmt_vec(p.normal), "offset": exact.format_rational(p.offset)}
            for p in space.planes
        ],
        "indexer": {"modulus": space.indexer.modulus, "sigma": list(space.indexer.sigma)},
        "subregions": [
            {
                "transform": _fmt_mat(s.transform),
                "shift": _fmt_vec(s.shift),
                "stencil": [list(site) for site in s.stencil],
                "psi_index": s.psi_index,
            }
            for s in space.subregions
        ],
        "ref_polys": [
            [
                {
                    "coeff": exact.format_rational(coeff),
                    "x_exps": list(exps),
                    "c_index": ci,
                }
                for (exps, ci), coeff in rp.poly.sorted_terms()
            ]
            for rp in space.ref_polys
        ],
    }
    if space.region_map.basis is not None:
        doc["region_map"]["basis"] = _fmt_mat(space.region_map.basis)
    return json.dumps(doc, indent=2) + "\n"


# -- validation --------------------------------------------------------------------


def validate_space(space: SplineSpace) -> list[Diagnostic]:
    """Check every invariant; an empty list means the space is sound.

    Errors make the space unusable; warnings flag oddities (for example a
    sigma entry marked unreachable) that evaluation tolerates.
    """
    out: list[Diagnostic] = []
    err = lambda path, msg: out.append(Diagnostic("error", path, msg))
    warn = lambda path, msg: out.append(Diagnostic("warning", path, msg))

    s = space.dim
    if not 1 <= s <= 4:
        err("dim", f"dimension {s} outside supported range 1..4")
        return out
    if len(space.planes) > 32:
        err("planes", f"{len(space.planes)} planes exceed the 32-bit BSP mask")

    lat = space.lattice
    if len(lat.generator) != s or any(len(row) != s for row in lat.generator):
        err("lattice.generator", f"expected a {s}x{s} matrix")
    elif exact.mat_det(lat.generator) == 0:
        err("lattice.generator", "generator matrix is singular")
    if not lat.cosets:
        err("lattice.cosets", "at least one coset offset is required")
    else:
        if any(len(c) != s for c in lat.cosets):
            err("lattice.cosets", f"coset offsets must have length {s}")
        elif len(set(lat.cosets)) != len(lat.cosets):
            err("lattice.cosets", "coset offsets must be pairwise distinct")
        elif not exact.is_zero_vec(lat.cosets[0]):
            err("lattice.cosets[0]", "first coset offset must be the zero vector")

    rm = space.region_map
    if rm.shape not in (PARALLELEPIPED, VORONOI):
        err("region_map.shape", f"unknown shape {rm.shape!r}")
    if rm.rounding not in (ROUND_NEAREST, FLOOR):
        err("region_map.rounding", f"unknown rounding {rm.rounding!r}")
    if rm.shape == PARALLELEPIPED:
        if rm.basis is None:
            err("region_map.basis", "parallelepiped shape requires a basis")
        elif len(rm.basis) != s or any(len(row) != s for row in rm.basis):
            err("region_map.basis", f"expected a {s}x{s} matrix")
        elif exact.mat_det(rm.basis) == 0:
            err("region_map.basis", "basis matrix is singular")
        elif not exact.is_integer_mat(rm.basis):
            # The shift to the reference region must land on coset-grid sites,
            # so the basis has to map integer vectors to integer vectors.
            err("region_map.basis", "basis must be an integer matrix")
    if rm.shape == VORONOI and rm.rounding != ROUND_NEAREST:
        warn("region_map.rounding", "voronoi shape ignores the rounding mode (always nearest)")

    for i, plane in enumerate(space.planes):
        if len(plane.normal) != s:
            err(f"planes[{i}].normal", f"expected length {s}")
        elif exact.is_zero_vec(plane.normal):
            err(f"planes[{i}].normal", "plane normal must be nonzero")

    idx = space.indexer
    nsub = len(space.subregions)
    if idx.modulus < 1:
        err("indexer.modulus", "modulus must be positive")
    if len(idx.sigma) != idx.modulus:
        err("indexer.sigma", f"length {len(idx.sigma)} does not equal modulus {idx.modulus}")
    seen: set[int] = set()
    for i, entry in enumerate(idx.sigma):
        if entry == UNREACHABLE:
            warn(f"indexer.sigma[{i}]", "entry marked unreachable")
        elif not 0 <= entry < nsub:
            err(f"indexer.sigma[{i}]", f"sub-region index {entry} out of range 0..{nsub - 1}")
        else:
            seen.add(entry)
    missing = set(range(nsub)) - seen
    if missing:
        err("indexer.sigma", f"sub-regions {sorted(missing)} never appear in sigma")

    if nsub == 0:
        err("subregions", "at least one sub-region is required")
    if not space.ref_polys:
        err("ref_polys", "at least one reference polynomial is required")

    # The first sub-region referencing a polynomial is its defining
    # (reference) sub-region and must carry the identity transform.
    definers: dict[int, int] = {}
    for i, sub in enumerate(space.subregions):
        spath = f"subregions[{i}]"
        if len(sub.transform) != s or any(len(row) != s for row in sub.transform):
            err(f"{spath}.transform", f"expected a {s}x{s} matrix")
            continue
        if exact.mat_det(sub.transform) == 0:
            err(f"{spath}.transform", "transform is singular")
        if len(sub.shift) != s:
            err(f"{spath}.shift", f"expected length {s}")
        if any(len(site) != s for site in sub.stencil):
            err(f"{spath}.stencil", f"stencil sites must have length {s}")
        if len(set(sub.stencil)) != len(sub.stencil):
            err(f"{spath}.stencil", "stencil sites must be pairwise distinct")
        if not 0 <= sub.psi_index < len(space.ref_polys):
            err(f"{spath}.psi_index", f"psi index {sub.psi_index} out of range")
            continue
        if sub.psi_index not in definers:
            definers[sub.psi_index] = i
            if not exact.is_identity_mat(sub.transform):
                err(f"{spath}.transform", "reference sub-region must carry the identity transform")
            if not exact.is_zero_vec(sub.shift):
                err(f"{spath}.shift", "reference sub-region must carry a zero shift")
        rp = space.ref_polys[sub.psi_index]
        want = set(range(len(sub.stencil)))
        got = rp.poly.symbols()
        if got != want:
            err(
                f"ref_polys[{sub.psi_index}]",
                f"symbols {sorted(got)} do not match stencil of length {len(sub.stencil)} "
                f"(via {spath})",
            )

    sizes = {len(sub.stencil) for sub in space.subregions}
    if len(sizes) > 1:
        err("subregions", f"stencil sizes differ across sub-regions: {sorted(sizes)}")

    for i, rp in enumerate(space.ref_polys):
        if rp.poly.dim != s:
            err(f"ref_polys[{i}]", f"polynomial dimension {rp.poly.dim} != {s}")
        if i not in definers:
            warn(f"ref_polys[{i}]", "polynomial is not referenced by any sub-region")

    return out


# -- the full-lattice nearest-site rule ---------------------------------------------


def nearest_lattice_site(space: SplineSpace, x) -> tuple[int, tuple[int, ...]]:
    """Nearest lattice site to x over all Cartesian cosets.

    Returns (coset index, integer coordinates within that coset).  Candidates
    are the per-axis round on each coset grid; the minimum squared distance
    wins, ties broken by the lexicographically smallest (coset, coords).
    Exact rational arithmetic, so ties are decided deterministically.
    """
    xs = [Fraction(v) for v in x]
    best = None
    for ci, offset in enumerate(space.lattice.cosets):
        local = [v - o for v, o in zip(xs, offset)]
        coords = tuple(_round_half_away(v) for v in local)
        site = [o + z for o, z in zip(offset, coords)]
        d2 = sum((v - w) ** 2 for v, w in zip(xs, site))
        key = (d2, ci, coords)
        if best is None or key < best:
            best = key
    return best[1], best[2]


def _round_half_away(q: Fraction) -> int:
    if q >= 0:
        return math.floor(q + Fraction(1, 2))
    return -_round_half_away(-q)


# -- shipped fixtures ---------------------------------------------------------------


def fixture_text(name: str) -> str:
    """Read a shipped description file by short name, e.g. 'zp'."""
    return resources.files("splinegen").joinpath(f"fixtures/{name}.json").read_text()


def load_fixture(name: str) -> SplineSpace:
    return parse_space(fixture_text(name))


def load_space(path) -> SplineSpace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_space(fh.read())
