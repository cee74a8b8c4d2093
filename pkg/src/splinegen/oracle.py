"""Independent reference evaluators for spline spaces.

`reference_eval` walks the evaluation recipe directly in numpy: coset loop,
shift into the region of evaluation, BSP classification, one plain
polynomial evaluation per point.  No Horner forms, no chunking, no
scheduling and no predication are involved, so it shares nothing with the
code generator beyond the space itself and `poly_eval`.

`convolution_eval` is slower and even more literal: it reconstructs by
summing data values against the basis function obtained from delta data,
site by site.  The basis has finite support, so truncating the sum at a
radius that covers the stencil reach is exact rather than approximate.
"""

from __future__ import annotations

import math

import numpy as np

from . import exact
from .ir import DataVolume
from .model import PARALLELEPIPED, ROUND_NEAREST, SplineSpace, UNREACHABLE


class UnreachableRegionError(Exception):
    """A point classified into a sigma entry marked unreachable."""


def _float_mat(m) -> np.ndarray:
    return np.array([[float(q) for q in row] for row in m])


def _round_half_away(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, np.floor(v + 0.5), np.ceil(v - 0.5))


def _rho(space: SplineSpace, xl: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shift points into the reference region: (integer shifts, local points)."""
    rm = space.region_map
    if rm.shape == PARALLELEPIPED:
        basis = _float_mat(rm.basis)
        identity = exact.is_identity_mat(rm.basis)
        rounding = rm.rounding
    else:  # voronoi cell of the per-coset grid: per-axis nearest site
        basis = np.eye(space.dim)
        identity = True
        rounding = ROUND_NEAREST
    u = xl if identity else xl @ np.linalg.inv(basis).T
    r = _round_half_away(u) if rounding == ROUND_NEAREST else np.floor(u)
    k = r if identity else r @ basis.T
    k = k.astype(np.int64)
    return k, xl - k.astype(xl.dtype)


def _membership(space: SplineSpace, xs: np.ndarray) -> np.ndarray:
    """Sub-region index per point via plane tests and the sigma lookup."""
    n = xs.shape[0]
    if space.nplanes == 0:
        return np.zeros(n, dtype=np.int64)
    q = np.zeros(n, dtype=np.int64)
    for i, plane in enumerate(space.planes):
        normal = np.array([float(v) for v in plane.normal])
        dot = xs @ normal
        q |= (dot >= float(plane.offset)).astype(np.int64) << i
    q %= space.indexer.modulus
    sigma = np.array(space.indexer.sigma, dtype=np.int64)
    idx = sigma[q]
    if (idx == UNREACHABLE).any():
        bad = int(q[idx == UNREACHABLE][0])
        raise UnreachableRegionError(
            f"point classified into unreachable sigma entry q={bad}"
        )
    return idx


def reference_eval_batch(space: SplineSpace, xs, data) -> np.ndarray:
    """Reference reconstruction at a batch of points, shape (N, dim)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != space.dim:
        raise ValueError(f"expected points of shape (N, {space.dim})")
    if data.ncosets != space.ncosets:
        raise ValueError(f"data has {data.ncosets} cosets, space wants {space.ncosets}")
    total = np.zeros(xs.shape[0])
    for ci, offset in enumerate(space.lattice.cosets):
        xl = xs - np.array([float(q) for q in offset])
        k, xloc = _rho(space, xl)
        idx = _membership(space, xloc)
        for j in np.unique(idx):
            sub = space.subregions[j]
            mask = idx == j
            t = _float_mat(sub.transform)
            tp = np.array([
                float(q) for q in exact.vec_neg(exact.mat_vec(sub.transform, sub.shift))
            ])
            u = xloc[mask] @ t.T + tp
            km = k[mask]
            cvals = [
                data.fetch(ci, tuple(km[:, d] + site[d] for d in range(space.dim)))
                for site in sub.stencil
            ]
            psi = space.ref_polys[sub.psi_index].poly
            total[mask] += psi.eval([u[:, d] for d in range(space.dim)], cvals)
    return total


def reference_eval(space: SplineSpace, x, data) -> float:
    """Reference reconstruction at a single point."""
    return float(reference_eval_batch(space, np.asarray([list(x)], dtype=np.float64), data)[0])


# -- the convolution-sum oracle ----------------------------------------------------------


def support_radius(space: SplineSpace) -> float:
    """Max-norm radius beyond which the basis function is certainly zero."""
    reach = max(
        abs(int(v)) for sub in space.subregions for site in sub.stencil for v in site
    )
    rm = space.region_map
    if rm.shape == PARALLELEPIPED:
        rows = [sum(abs(q) for q in row) for row in rm.basis]
        roe = max(float(r) for r in rows)
        if rm.rounding == ROUND_NEAREST:
            roe /= 2.0
    else:
        roe = 0.5
    return reach + roe


def delta_volume(space: SplineSpace, radius: float | None = None) -> DataVolume:
    """A volume holding a single 1 at the origin site of coset zero.

    Extents are wide enough that periodic wraparound cannot fold the support
    back onto itself within the evaluation window.
    """
    r = support_radius(space) if radius is None else radius
    extent = 2 * (int(math.ceil(r)) + 2) + 3
    shape = (extent,) * space.dim
    arrays = [np.zeros(shape) for _ in range(space.ncosets)]
    arrays[0][(0,) * space.dim] = 1.0
    return DataVolume(arrays)


def basis_from_delta_batch(space: SplineSpace, ys, delta: DataVolume | None = None) -> np.ndarray:
    """Basis function values phi(y): reconstruction from delta data."""
    if delta is None:
        delta = delta_volume(space)
    return reference_eval_batch(space, ys, delta)


def basis_from_delta(space: SplineSpace, y) -> float:
    return float(basis_from_delta_batch(space, np.asarray([list(y)], dtype=np.float64))[0])


def convolution_eval_batch(space: SplineSpace, xs, data,
                           radius: float | None = None) -> np.ndarray:
    """Brute-force convolution sum over all lattice sites within the radius."""
    xs = np.asarray(xs, dtype=np.float64)
    r = support_radius(space) if radius is None else radius
    delta = delta_volume(space, r)
    window = int(math.floor(r + 1.5))
    anchor = _round_half_away(xs).astype(np.int64)
    total = np.zeros(xs.shape[0])
    offsets = np.stack(
        np.meshgrid(*([np.arange(-window, window + 1)] * space.dim), indexing="ij"),
        axis=-1,
    ).reshape(-1, space.dim)
    for ci, coset in enumerate(space.lattice.cosets):
        shift = np.array([float(q) for q in coset])
        for w in offsets:
            z = anchor + w  # integer site on this coset's grid
            site = z.astype(np.float64) + shift
            values = data.fetch(ci, tuple(z[:, d] for d in range(space.dim)))
            phi = basis_from_delta_batch(space, xs - site, delta)
            total += values * phi
    return total


def convolution_eval(space: SplineSpace, x, data, radius: float | None = None) -> float:
    return float(
        convolution_eval_batch(space, np.asarray([list(x)], dtype=np.float64), data, radius)[0]
    )


# -- data shifting (for the invariance properties) -----------------------------------------


def shift_volume(space: SplineSpace, data: DataVolume, z) -> DataVolume:
    """Shift periodic data by the lattice vector generator @ z (z integer).

    The shifted volume satisfies f(x + Lz, shifted) == f(x, data); cosets
    permute when the shift is not a whole coset-grid step.
    """
    zvec = exact.vec(z)
    delta = exact.mat_vec(space.lattice.generator, zvec)
    arrays: list[np.ndarray | None] = [None] * space.ncosets
    for ci, offset in enumerate(space.lattice.cosets):
        target = exact.vec_sub(offset, delta)
        home = None
        for cj, other in enumerate(space.lattice.cosets):
            w = exact.vec_sub(target, other)
            if exact.is_integer_vec(w):
                home = (cj, tuple(int(v) for v in w))
                break
        if home is None:
            raise ValueError(
                f"lattice shift {z} does not map coset {ci} onto another coset"
            )
        cj, w = home
        arrays[ci] = np.roll(data.arrays[cj], shift=tuple(-v for v in w),
                             axis=tuple(range(space.dim)))
    return DataVolume(arrays)
