"""Regenerate the shipped spline-space description files.

Each fixture is constructed with exact rationals and written through
serialize_space, so the files on disk are canonical and round-trip.  Run
from the repository root:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import pathlib
import sys
from fractions import Fraction

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from splinegen import exact
from splinegen.model import (
    BspPlane,
    LatticeSpec,
    RefPoly,
    RegionMap,
    SplineSpace,
    SubRegion,
    SubRegionIndexer,
    serialize_space,
    validate_space,
)
from splinegen.poly import Poly

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "splinegen" / "fixtures"

F = Fraction
ID1 = exact.mat_identity(1)
ID2 = exact.mat_identity(2)
ID3 = exact.mat_identity(3)


def linear1d() -> SplineSpace:
    """Unit-spacing linear B-spline: f(x) = c_k (1 - u) + c_{k+1} u."""
    psi = Poly(1, {((0,), 0): F(1), ((1,), 0): F(-1), ((1,), 1): F(1)})
    return SplineSpace(
        name="linear1d",
        dim=1,
        lattice=LatticeSpec(generator=ID1, cosets=(exact.vec([0]),)),
        region_map=RegionMap(shape="parallelepiped", rounding="floor", basis=ID1),
        planes=(),
        indexer=SubRegionIndexer(modulus=1, sigma=(0,)),
        subregions=(
            SubRegion(transform=ID1, shift=exact.vec([0]), stencil=((0,), (1,)), psi_index=0),
        ),
        ref_polys=(RefPoly(psi),),
    )


def _zp_reference_poly() -> Poly:
    """Quadratic reference polynomial of the four-direction 2D box spline.

    Expressed in the centered unit-square region of evaluation; the reference
    sub-region is the triangle x0 >= |x1| and the seven symbols correspond to
    the stencil sites returned by _zp_reference_stencil, in order.
    """
    terms = {
        # x0^2
        ((2, 0), 0): F(1, 2),
        ((2, 0), 1): F(-1, 4),
        ((2, 0), 2): F(-1, 2),
        ((2, 0), 3): F(-1, 4),
        ((2, 0), 4): F(1, 4),
        ((2, 0), 6): F(1, 4),
        # x1^2
        ((0, 2), 1): F(1, 4),
        ((0, 2), 2): F(-1, 2),
        ((0, 2), 3): F(1, 4),
        ((0, 2), 4): F(1, 4),
        ((0, 2), 5): F(-1, 2),
        ((0, 2), 6): F(1, 4),
        # x0*x1
        ((1, 1), 1): F(1, 2),
        ((1, 1), 3): F(-1, 2),
        ((1, 1), 4): F(-1, 2),
        ((1, 1), 6): F(1, 2),
        # x1
        ((0, 1), 1): F(-1, 2),
        ((0, 1), 3): F(1, 2),
        # x0
        ((1, 0), 0): F(-1, 2),
        ((1, 0), 5): F(1, 2),
        # 1
        ((0, 0), 0): F(1, 8),
        ((0, 0), 1): F(1, 8),
        ((0, 0), 2): F(1, 2),
        ((0, 0), 3): F(1, 8),
        ((0, 0), 5): F(1, 8),
    }
    return Poly(2, terms)


def _zp_reference_stencil() -> tuple[tuple[int, ...], ...]:
    return ((-1, 0), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1))


ROT_CW = exact.mat([[0, 1], [-1, 0]])     # maps the top triangle onto the right one
ROT_180 = exact.mat([[-1, 0], [0, -1]])
ROT_CCW = exact.mat([[0, -1], [1, 0]])


def _transformed_stencil(transform, stencil):
    """Fetch sites for a rotated sub-region: transpose(T) applied per site."""
    tt = exact.mat_transpose(transform)
    out = []
    for site in stencil:
        moved = exact.mat_vec(tt, exact.vec(site))
        assert exact.is_integer_vec(moved), moved
        out.append(tuple(int(q) for q in moved))
    return tuple(out)


def zp() -> SplineSpace:
    """The piecewise-quadratic four-direction box spline on the 2D grid.

    The centered unit square tiles the plane; its two diagonals cut it into
    four triangular sub-regions related by quarter turns.
    """
    psi = _zp_reference_poly()
    ref = _zp_reference_stencil()
    zero2 = exact.vec([0, 0])
    subs = []
    for transform in (ID2, ROT_CW, ROT_180, ROT_CCW):
        subs.append(
            SubRegion(
                transform=transform,
                shift=zero2,
                stencil=_transformed_stencil(transform, ref),
                psi_index=0,
            )
        )
    return SplineSpace(
        name="zp",
        dim=2,
        lattice=LatticeSpec(generator=ID2, cosets=(zero2,)),
        region_map=RegionMap(shape="parallelepiped", rounding="round_nearest", basis=ID2),
        planes=(
            BspPlane(normal=exact.vec([1, -1]), offset=F(0)),
            BspPlane(normal=exact.vec([1, 1]), offset=F(0)),
        ),
        indexer=SubRegionIndexer(modulus=4, sigma=(2, 3, 1, 0)),
        subregions=tuple(subs),
        ref_polys=(RefPoly(psi),),
    )


def zp_k2() -> SplineSpace:
    """Same reconstruction as zp, encoded with two reference polynomials.

    The top triangle keeps its own polynomial instead of reusing the right
    one through a rotation, which forces a two-way dispatch in generated
    code.  Useful for exercising predication against branching.
    """
    base = zp()
    psi_right = base.ref_polys[0].poly
    psi_top = psi_right.substitute_affine(ROT_CW, exact.vec([0, 0]))
    zero2 = exact.vec([0, 0])
    subs = (
        SubRegion(ID2, zero2, base.subregions[0].stencil, 0),
        SubRegion(ID2, zero2, base.subregions[1].stencil, 1),
        SubRegion(ROT_180, zero2, base.subregions[2].stencil, 0),
        SubRegion(ROT_180, zero2, base.subregions[3].stencil, 1),
    )
    return SplineSpace(
        name="zp_k2",
        dim=2,
        lattice=base.lattice,
        region_map=base.region_map,
        planes=base.planes,
        indexer=base.indexer,
        subregions=subs,
        ref_polys=(RefPoly(psi_right), RefPoly(psi_top)),
    )


def _tensor_linear(dim: int) -> Poly:
    """Expanded multilinear interpolation polynomial on the unit cell."""
    out = Poly.zero(dim)
    for j in range(2**dim):
        corner = [(j >> (dim - 1 - d)) & 1 for d in range(dim)]
        weight = Poly.constant(dim, 1)
        for d, bit in enumerate(corner):
            x = Poly.variable(dim, d)
            weight = weight * (x if bit else Poly.constant(dim, 1) - x)
        out = out + weight * Poly.symbol(dim, j)
    return out


def _corner_sites(dim: int) -> tuple[tuple[int, ...], ...]:
    return tuple(
        tuple((j >> (dim - 1 - d)) & 1 for d in range(dim)) for j in range(2**dim)
    )


def trilinear() -> SplineSpace:
    return SplineSpace(
        name="trilinear",
        dim=3,
        lattice=LatticeSpec(generator=ID3, cosets=(exact.vec([0, 0, 0]),)),
        region_map=RegionMap(shape="parallelepiped", rounding="floor", basis=ID3),
        planes=(),
        indexer=SubRegionIndexer(modulus=1, sigma=(0,)),
        subregions=(
            SubRegion(
                transform=ID3,
                shift=exact.vec([0, 0, 0]),
                stencil=_corner_sites(3),
                psi_index=0,
            ),
        ),
        ref_polys=(RefPoly(_tensor_linear(3)),),
    )


def trilinear_voronoi() -> SplineSpace:
    """Trilinear interpolation with the Voronoi cell as region of evaluation.

    The centered cell is cut by the three coordinate planes into octants;
    each octant shifts into the unit cell via a pure translation, so this
    exercises nonzero shifts, a sigma permutation and the voronoi shape while
    reconstructing exactly the same function as the plain trilinear space.
    """
    corners = _corner_sites(3)
    subs = []
    order = [7] + [q for q in range(7)]  # octant (1,1,1) first: its shift is zero
    for q in order:
        octant = [(q >> d) & 1 for d in range(3)]
        base = [o - 1 for o in octant]
        subs.append(
            SubRegion(
                transform=ID3,
                shift=exact.vec(base),
                stencil=tuple(tuple(c + b for c, b in zip(site, base)) for site in corners),
                psi_index=0,
            )
        )
    sigma = [0] * 8
    for index, q in enumerate(order):
        sigma[q] = index
    return SplineSpace(
        name="trilinear_voronoi",
        dim=3,
        lattice=LatticeSpec(generator=ID3, cosets=(exact.vec([0, 0, 0]),)),
        region_map=RegionMap(shape="voronoi", rounding="round_nearest", basis=None),
        planes=tuple(
            BspPlane(normal=exact.vec([1 if d == i else 0 for d in range(3)]), offset=F(0))
            for i in range(3)
        ),
        indexer=SubRegionIndexer(modulus=8, sigma=tuple(sigma)),
        subregions=tuple(subs),
        ref_polys=(RefPoly(_tensor_linear(3)),),
    )


def halfgrid1d() -> SplineSpace:
    """Linear interpolation on the half-integer grid stored as two cosets.

    The width-1/2 hat function splits the unit coset cell into two
    sub-regions; the second one reaches the reference polynomial through the
    affine map u = -(x - 1), exercising nonzero shifts and the coset loop.
    """
    psi = Poly(1, {((0,), 0): F(1), ((1,), 0): F(-2)})
    return SplineSpace(
        name="halfgrid1d",
        dim=1,
        lattice=LatticeSpec(
            generator=exact.mat([[F(1, 2)]]),
            cosets=(exact.vec([0]), (F(1, 2),)),
        ),
        region_map=RegionMap(shape="parallelepiped", rounding="floor", basis=ID1),
        planes=(BspPlane(normal=exact.vec([1]), offset=F(1, 2)),),
        indexer=SubRegionIndexer(modulus=2, sigma=(0, 1)),
        subregions=(
            SubRegion(transform=ID1, shift=exact.vec([0]), stencil=((0,),), psi_index=0),
            SubRegion(
                transform=exact.mat([[-1]]), shift=exact.vec([1]), stencil=((1,),), psi_index=0
            ),
        ),
        ref_polys=(RefPoly(psi),),
    )


ALL = (linear1d, zp, zp_k2, trilinear, trilinear_voronoi, halfgrid1d)


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    for build in ALL:
        space = build()
        problems = [d for d in validate_space(space) if d.severity == "error"]
        if problems:
            for d in problems:
                print(f"{space.name}: {d}", file=sys.stderr)
            return 1
        path = OUT / f"{space.name}.json"
        text = serialize_space(space)
        path.write_text(text)
        print(f"wrote {path} ({len(text)} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
