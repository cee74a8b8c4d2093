"""Exact rational scalars, vectors and small matrices.

Everything in the spline space description is kept as `fractions.Fraction`
until the moment a value is lowered into a generated program, so quantities
like 1/8 survive all symbolic manipulation without float corruption.
Matrices are tuples of tuples (row major) and never larger than 4x4.
"""

from __future__ import annotations

from fractions import Fraction

Vec = tuple[Fraction, ...]
Mat = tuple[tuple[Fraction, ...], ...]


def parse_rational(value) -> Fraction:
    """Parse an int, or a string like "3" or "-1/8", into a Fraction.

    Floats are rejected on purpose: they do not round-trip exactly.
    """
    if isinstance(value, bool):
        raise ValueError("expected a rational, got a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"bad rational literal {value!r}: {e}") from None
    raise ValueError(f"expected int or 'num/den' string, got {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return str(q)


def vec(values) -> Vec:
    return tuple(Fraction(v) for v in values)


def mat(rows) -> Mat:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def mat_identity(s: int) -> Mat:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(s)) for i in range(s))


def mat_transpose(m: Mat) -> Mat:
    return tuple(zip(*m))


def mat_vec(m: Mat, v: Vec) -> Vec:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = mat_transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def vec_add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vec_neg(a: Vec) -> Vec:
    return tuple(-x for x in a)


def mat_det(m: Mat) -> Fraction:
    s = len(m)
    if s == 1:
        return m[0][0]
    if s == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    # Laplace expansion along the first row; s <= 4 so this stays cheap.
    total = Fraction(0)
    for j in range(s):
        minor = tuple(tuple(row[k] for k in range(s) if k != j) for row in m[1:])
        sign = -1 if j % 2 else 1
        total += sign * m[0][j] * mat_det(minor)
    return total


def mat_inv(m: Mat) -> Mat:
    """Exact inverse by Gauss-Jordan elimination. Raises ValueError if singular."""
    s = len(m)
    aug = [list(row) + [Fraction(1 if i == j else 0) for j in range(s)] for i, row in enumerate(m)]
    for col in range(s):
        pivot = next((r for r in range(col, s) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = Fraction(1) / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(s):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * p for v, p in zip(aug[r], aug[col])]
    return tuple(tuple(row[s:]) for row in aug)


def is_integer_vec(v: Vec) -> bool:
    return all(q.denominator == 1 for q in v)


def is_integer_mat(m: Mat) -> bool:
    return all(q.denominator == 1 for row in m for q in row)


def is_identity_mat(m: Mat) -> bool:
    s = len(m)
    return m == mat_identity(s)


def is_zero_vec(v: Vec) -> bool:
    return all(q == 0 for q in v)
