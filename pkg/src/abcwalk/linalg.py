"""Small exact linear algebra over Q.

Matrices are tuples of row tuples.  Entries are ``int`` whenever they are
integral and ``Fraction`` otherwise, so lattice computations stay on the
fast integer path.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = tuple[tuple, ...]
Vector = tuple


def norm_entry(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        return norm_entry(Fraction(x))
    if isinstance(x, float):
        if not x.is_integer():
            raise TypeError("exact entries required; got a non-integral float")
        return int(x)
    return norm_entry(Fraction(x))


def as_exact(A: Sequence[Sequence]) -> Matrix:
    rows = tuple(tuple(norm_entry(x) for x in row) for row in A)
    if any(len(r) != len(rows) for r in rows):
        raise ValueError("square matrix required")
    return rows


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zeros(n: int) -> Matrix:
    return tuple((0,) * n for _ in range(n))


def scalar(c, n: int) -> Matrix:
    return tuple(tuple(c if i == j else 0 for j in range(n)) for i in range(n))


def add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(norm_entry(a + b) for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(norm_entry(a - b) for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def matmul(A: Matrix, B: Matrix) -> Matrix:
    cols = list(zip(*B))
    return tuple(
        tuple(norm_entry(sum(a * b for a, b in zip(row, col))) for col in cols) for row in A
    )


def matvec(A: Matrix, v: Vector) -> Vector:
    return tuple(norm_entry(sum(a * x for a, x in zip(row, v))) for row in A)


def vec_add(u: Vector, v: Vector) -> Vector:
    return tuple(norm_entry(a + b) for a, b in zip(u, v))


def vec_scale(c, v: Vector) -> Vector:
    return tuple(norm_entry(c * a) for a in v)


def sup_norm(v: Vector):
    return max((abs(x) for x in v), default=0)


def row_sum_norm(A: Matrix):
    """Operator norm induced by the sup norm: the largest absolute row sum."""
    return max(sum(abs(a) for a in row) for row in A)


def det(A: Matrix):
    n = len(A)
    M = [[Fraction(x) for x in row] for row in A]
    d = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            d = -d
        d *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return norm_entry(d)


def inverse(A: Matrix) -> Matrix:
    """Gauss-Jordan inverse; raises ``ZeroDivisionError`` for singular input."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [x / p for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return tuple(tuple(norm_entry(x) for x in row[n:]) for row in M)


def power(A: Matrix, k: int) -> Matrix:
    if k < 0:
        return power(inverse(A), -k)
    result = identity(len(A))
    base = A
    while k:
        if k & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        k >>= 1
    return result


def solve(A: Matrix, b: Vector) -> Vector:
    """Solve A x = b exactly for square invertible A."""
    return matvec(inverse(A), b)


def max_abs(A: Matrix):
    return max((abs(x) for row in A for x in row), default=0)


def to_float(A: Matrix):
    import numpy as np

    return np.array([[float(x) for x in row] for row in A], dtype=float)
