"""Complement matrix and the quadrics cutting out the moment-angle manifold."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space


@dataclass(frozen=True, eq=False)
class QuadricSystem:
    """Rows of ``C`` span the left null space of ``A``; ``c = C b``.

    The real moment-angle manifold is ``{u : C (u*u) = c}``.
    """

    C: np.ndarray
    c: np.ndarray
    m: int
    n: int

    def to_dict(self):
        return {"C": self.C.tolist(), "c": self.c.tolist()}


def _normalise_rows(C):
    # largest-magnitude entry of each row becomes +1 (first one on ties)
    C = np.array(C, dtype=float)
    for k in range(C.shape[0]):
        j = int(np.argmax(np.abs(C[k]) > np.abs(C[k]).max() * (1 - 1e-12)))
        C[k] /= C[k, j]
    # entries within rounding of an integer are snapped, so e.g. simplices give exactly (1, ..., 1)
    r = np.round(C)
    snap = np.abs(C - r) <= 1e-14 * np.maximum(1.0, np.abs(C))
    C[snap] = r[snap]
    return C


def complement_matrix(P, basis=None):
    """Quadric system of ``P``.

    ``basis`` overrides the null-space basis (any full-rank ``C`` with
    ``C A = 0``); by default an orthonormal basis is computed and each row
    rescaled so its largest entry is 1.
    """
    if basis is None:
        basis = null_space(P.A.T).T
    C = _normalise_rows(basis)
    if C.shape != (P.m - P.n, P.m):
        raise ValueError(f"complement matrix must be {(P.m - P.n, P.m)}, got {C.shape}")
    C.setflags(write=False)
    c = C @ P.b
    c.setflags(write=False)
    return QuadricSystem(C, c, P.m, P.n)


def phi_residuals(QS, u):
    """``Phi_k(u) = sum_j C[k, j] |u_j|^2 - c_k``; accepts real or complex, single or batched."""
    u = np.asarray(u)
    sq = (u * np.conj(u)).real if np.iscomplexobj(u) else u * u
    return sq @ QS.C.T - QS.c
