"""Shared test oracles, deliberately independent of the code under test.

The exact piecewise-quadratic oracle evaluates the four-direction 2D box
spline by literal area computation: the value at z is the area of the
region of (t, u) in the unit square satisfying z0-1 <= t+u <= z0 and
z1-1 <= t-u <= z1, which we obtain by half-plane clipping with rational
arithmetic.  No polynomial from the package is involved, so agreement with
the shipped description file is meaningful evidence.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

F = Fraction


def agree(a, b, rtol=1e-9, atol=1e-12) -> bool:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return bool(np.all(np.abs(a - b) <= atol + rtol * np.maximum(np.abs(a), np.abs(b))))


def max_err(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# -- exact polygon clipping -----------------------------------------------------------


def _clip(polygon, normal, bound):
    """Keep the part of the polygon with normal . p <= bound (exact)."""
    nx, ny = normal
    out = []
    count = len(polygon)
    for i in range(count):
        cur = polygon[i]
        nxt = polygon[(i + 1) % count]
        cur_in = nx * cur[0] + ny * cur[1] <= bound
        nxt_in = nx * nxt[0] + ny * nxt[1] <= bound
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            dx = nxt[0] - cur[0]
            dy = nxt[1] - cur[1]
            denom = nx * dx + ny * dy
            t = (bound - nx * cur[0] - ny * cur[1]) / denom
            out.append((cur[0] + t * dx, cur[1] + t * dy))
    return out


def _area(polygon) -> Fraction:
    total = F(0)
    count = len(polygon)
    for i in range(count):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % count]
        total += x0 * y1 - x1 * y0
    return abs(total) / 2


def box4_value(z0: Fraction, z1: Fraction) -> Fraction:
    """Four-direction box spline (directions e0, e1, e0+e1, e0-e1) at z."""
    poly = [(F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))]
    poly = _clip(poly, (F(1), F(1)), z0)            # t + u <= z0
    poly = _clip(poly, (F(-1), F(-1)), 1 - z0)      # t + u >= z0 - 1
    poly = _clip(poly, (F(1), F(-1)), z1)           # t - u <= z1
    poly = _clip(poly, (F(-1), F(1)), 1 - z1)       # t - u >= z1 - 1
    if len(poly) < 3:
        return F(0)
    return _area(poly)


def zp_phi_exact(y0, y1) -> Fraction:
    """Centered ZP basis function, exact rational value."""
    return box4_value(F(y0) + F(3, 2), F(y1) + F(1, 2))


def interpolate_quadratic_2d(samples):
    """Fit a0 + a1 x0 + a2 x1 + a3 x0^2 + a4 x0 x1 + a5 x1^2 exactly.

    `samples` is a list of ((x0, x1), value) with rational entries; exactly
    six samples in general position are required.
    """
    monomials = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    if len(samples) != 6:
        raise ValueError("need exactly six samples")
    rows = []
    rhs = []
    for (x0, x1), value in samples:
        rows.append([F(x0) ** e0 * F(x1) ** e1 for e0, e1 in monomials])
        rhs.append(F(value))
    # Gaussian elimination over the rationals.
    n = 6
    aug = [rows[i] + [rhs[i]] for i in range(n)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = F(1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * p for v, p in zip(aug[r], aug[col])]
    coeffs = {monomials[i]: aug[i][n] for i in range(n)}
    return {k: v for k, v in coeffs.items() if v != 0}


# -- schedule plan walker ---------------------------------------------------------------


def check_plan(plan, blocks, depth):
    """Brute-force verification of every pipeline plan invariant."""
    symbols = [j for block in blocks for j in block]
    fetched: set[int] = set()
    stalled: set[int] = set()
    computed: list[int] = []
    in_flight = 0
    peak = 0
    for step in plan.steps:
        if step.kind == "FETCH":
            assert step.index not in fetched, f"double fetch of c{step.index}"
            fetched.add(step.index)
            in_flight += 1
            peak = max(peak, in_flight)
            assert in_flight <= depth, "pipeline depth exceeded"
        elif step.kind == "STALL":
            assert step.index in fetched, f"stall before fetch of c{step.index}"
            assert step.index not in stalled, f"double stall of c{step.index}"
            stalled.add(step.index)
            in_flight -= 1
        elif step.kind == "COMPUTE":
            k = step.index
            assert computed == list(range(k)), "chunks computed out of order"
            for j in blocks[k]:
                assert j in stalled, f"compute {k} before stall of c{j}"
            computed.append(k)
        else:
            raise AssertionError(f"unknown step kind {step.kind}")
    assert fetched == set(symbols), "fetched set does not equal the stencil"
    assert stalled == set(symbols), "stalled set does not equal the stencil"
    assert computed == list(range(len(blocks))), "missing computes"
    expected_peak = min(depth, len(symbols)) if symbols else 0
    assert peak == expected_peak, f"peak in flight {peak} != {expected_peak}"


# -- closed-form interpolators ------------------------------------------------------------


def linear1d_closed(points, samples):
    """Plain linear interpolation on the periodic integer grid."""
    x = np.asarray(points)[:, 0]
    n = len(samples)
    i0 = np.floor(x).astype(int)
    frac = x - i0
    return samples[i0 % n] * (1 - frac) + samples[(i0 + 1) % n] * frac


def halfgrid_closed(points, coset0, coset1):
    """Linear interpolation on the half-integer grid stored as two cosets."""
    x = np.asarray(points)[:, 0]
    n = len(coset0)
    merged = np.empty(2 * n)
    merged[0::2] = coset0
    merged[1::2] = coset1
    t = 2 * x
    i0 = np.floor(t).astype(int)
    frac = t - i0
    return merged[i0 % (2 * n)] * (1 - frac) + merged[(i0 + 1) % (2 * n)] * frac


def trilinear_closed(points, volume):
    """Trilinear interpolation with periodic wrap."""
    p = np.asarray(points)
    shape = volume.shape
    base = np.floor(p).astype(int)
    frac = p - base
    out = np.zeros(len(p))
    for corner in range(8):
        bits = [(corner >> (2 - d)) & 1 for d in range(3)]
        weight = np.ones(len(p))
        for d, bit in enumerate(bits):
            weight = weight * (frac[:, d] if bit else 1 - frac[:, d])
        idx = tuple((base[:, d] + bits[d]) % shape[d] for d in range(3))
        out += weight * volume[idx]
    return out


# -- seeded random polynomials (non-hypothesis paths) ----------------------------------------


def random_poly(rng, dim, nsyms, max_terms=10, max_exp=3):
    """Random exact polynomial whose symbols are exactly 0..nsyms-1."""
    from splinegen.poly import Poly

    terms = {}
    for j in range(nsyms):  # make sure every symbol appears
        exps = tuple(int(rng.integers(0, max_exp + 1)) for _ in range(dim))
        terms[(exps, j)] = F(int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    for _ in range(max(0, max_terms - nsyms)):
        exps = tuple(int(rng.integers(0, max_exp + 1)) for _ in range(dim))
        ci = int(rng.integers(-1, nsyms)) if nsyms else -1
        num = int(rng.integers(-8, 9))
        if num == 0:
            continue
        key = (exps, ci)
        terms[key] = terms.get(key, F(0)) + F(num, int(rng.integers(1, 9)))
    return Poly(dim, {k: v for k, v in terms.items() if v != 0})
