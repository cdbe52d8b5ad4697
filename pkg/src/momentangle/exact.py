"""Exact rational linear algebra used as an independent oracle.

Everything here works on lists of :class:`fractions.Fraction` and never touches
numpy, so it can be used to cross-check the floating point code paths in
:mod:`momentangle.geometry` and :mod:`momentangle.gale`.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np


def to_fraction(value):
    """Parse an int, decimal string, ``"p/q"`` string or float exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, np.integer):
        return Fraction(int(value))
    return Fraction(str(value).strip())


def rref(rows):
    """Reduced row echelon form over the rationals.

    Returns ``(R, pivots)`` where ``R`` is a new matrix and ``pivots`` the
    pivot column of each nonzero row.
    """
    m = [list(r) for r in rows]
    if not m:
        return m, []
    n_rows, n_cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return m, pivots


def rank(rows):
    return len(rref(rows)[1])


def solve(A, rhs):
    """Solve the square system ``A x = rhs``; ``None`` if singular."""
    n = len(A)
    aug = [list(A[i]) + [rhs[i]] for i in range(n)]
    R, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return [R[i][n] for i in range(n)]


def null_space(rows):
    """Basis of the right null space ``{x : rows @ x = 0}``."""
    n_cols = len(rows[0])
    R, pivots = rref(rows)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n_cols
        x[f] = Fraction(1)
        for i, p in enumerate(pivots):
            x[p] = -R[i][f]
        basis.append(x)
    return basis


def left_null_space(A):
    """Rows ``c`` with ``c @ A = 0``, i.e. an exact complement matrix."""
    At = [list(col) for col in zip(*A)]
    return null_space(At)


def enumerate_vertices(A, b):
    """Brute-force vertex enumeration of ``{x : A x + b >= 0}`` in exact arithmetic.

    Returns a list of ``(x, omega)`` sorted by ``omega``, with ``omega`` the
    full set of facets active at ``x`` (so a non-simple vertex shows up with
    more than ``n`` indices).
    """
    m, n = len(A), len(A[0])
    found = {}
    for S in combinations(range(m), n):
        x = solve([A[i] for i in S], [-b[i] for i in S])
        if x is None:
            continue
        vals = [sum(a * xi for a, xi in zip(A[i], x)) + b[i] for i in range(m)]
        if any(v < 0 for v in vals):
            continue
        key = tuple(x)
        if key not in found:
            found[key] = tuple(i for i in range(m) if vals[i] == 0)
    return sorted(((list(x), om) for x, om in found.items()), key=lambda t: t[1])


def row_space_residual(C1, C2):
    """Mutual projection residual between the row spaces of two matrices.

    Rows are normalised first; the result is the largest distance from a row
    of either matrix to the row space of the other.
    """
    C1 = np.atleast_2d(np.asarray(C1, dtype=float))
    C2 = np.atleast_2d(np.asarray(C2, dtype=float))

    def one_way(X, Y):
        Q, _ = np.linalg.qr(Y.T)
        Xn = X / np.linalg.norm(X, axis=1, keepdims=True)
        return float(np.max(np.linalg.norm(Xn - (Xn @ Q) @ Q.T, axis=1)))

    return max(one_way(C1, C2), one_way(C2, C1))
