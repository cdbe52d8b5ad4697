"""Points of the real moment-angle manifold and the sign-flip action on them.

Batched functions take arrays of shape ``(N, m)``; single points are accepted
wherever that is unambiguous.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NotOnManifold, OutsidePolytope, RankDeficient, RejectionBudgetExceeded
from .gale import phi_residuals
from .geometry import embed_jP

TAU_MEM = 1e-9
TAU_RANK = 1e-8


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    u: np.ndarray
    residual: float

    @classmethod
    def checked(cls, QS, u, tol=TAU_MEM):
        u = np.array(u, dtype=float)
        res = float(np.max(np.abs(phi_residuals(QS, u)), initial=0.0))
        if res >= tol:
            raise NotOnManifold(f"quadric residual {res:.3g} >= {tol:g}")
        u.setflags(write=False)
        return cls(u, res)


@dataclass(frozen=True)
class SignVector:
    """Element of the group of sign changes, stored as a tuple of +-1."""

    signs: tuple

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"sign vector entries must be +1 or -1: {self.signs}")

    @classmethod
    def identity(cls, m):
        return cls((1,) * m)

    @classmethod
    def random(cls, m, rng):
        return cls(tuple(int(s) for s in rng.choice([-1, 1], size=m)))

    def __mul__(self, other):
        return SignVector(tuple(a * b for a, b in zip(self.signs, other.signs)))

    def array(self):
        return np.array(self.signs, dtype=float)

    def restrict(self, indices):
        return tuple(self.signs[i] for i in indices)


def membership_residual(QS, u):
    """Sup-norm of the quadric residuals, per point."""
    return np.max(np.abs(phi_residuals(QS, u)), axis=-1)


def section_sP(P, QS, x, tol=None):
    """``s_P(x) = (sqrt(a_i x + b_i))_i`` for ``x`` in ``P``."""
    tol = P.tau_act if tol is None else tol
    y = embed_jP(P, x)
    if np.any(y < -tol):
        raise OutsidePolytope(f"point violates an inequality by {-float(np.min(y)):.3g}")
    u = np.sqrt(np.maximum(y, 0.0))
    if u.ndim == 1:
        return ManifoldPoint.checked(QS, u)
    bad = membership_residual(QS, u) >= TAU_MEM
    if np.any(bad):
        raise NotOnManifold(f"{int(bad.sum())} lifted points miss the quadrics")
    return u


def orbit_project(QS, u):
    """Orbit map ``u -> u*u`` onto ``j_P(P)``."""
    u = u.u if isinstance(u, ManifoldPoint) else np.asarray(u, dtype=float)
    return u * u


def sign_action(sigma, u):
    """``(sigma . u)_j = sigma_j u_j``; ``sigma`` may be a SignVector or an array of signs."""
    s = sigma.array() if isinstance(sigma, SignVector) else np.asarray(sigma, dtype=float)
    if isinstance(u, ManifoldPoint):
        v = s * u.u
        v.setflags(write=False)
        return ManifoldPoint(v, u.residual)
    return s * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class RankReport:
    rank: int
    s_min: float
    s_max: float
    ok: bool

    @property
    def ratio(self):
        return self.s_min / self.s_max if self.s_max > 0 else 0.0


def jacobian(QS, u):
    """``J[k, j] = 2 C[k, j] u_j``."""
    return 2.0 * QS.C * np.asarray(u, dtype=float)[..., None, :]


def jacobian_rank_check(QS, u, tau_rank=TAU_RANK, tau_mem=TAU_MEM, raise_on_failure=True):
    """Certify that the quadric differentials are independent at ``u``."""
    u = u.u if isinstance(u, ManifoldPoint) else np.asarray(u, dtype=float)
    res = float(np.max(np.abs(phi_residuals(QS, u)), initial=0.0))
    if res >= tau_mem:
        raise NotOnManifold(f"rank check needs a manifold point (residual {res:.3g})")
    s = np.linalg.svd(jacobian(QS, u), compute_uv=False)
    k = QS.m - QS.n
    ok = bool(s.size == k and s[-1] > tau_rank * s[0])
    rep = RankReport(int(np.sum(s > tau_rank * s[0])), float(s[-1]), float(s[0]), ok)
    if not ok and raise_on_failure:
        raise RankDeficient(f"s_min/s_max = {rep.ratio:.3g} at u = {u.tolist()}")
    return rep


def rank_ratios(QS, U):
    """Batched ``s_min / s_max`` of the quadric Jacobian."""
    s = np.linalg.svd(jacobian(QS, U), compute_uv=False)
    return s[:, -1] / s[:, 0]


# sampling

def face_points(P, facets, count, rng):
    """``count`` points of ``j_P(P)`` in the relative interior of the face cut out by ``facets``.

    Points are convex combinations of the face's vertices, built from vertex
    ``y`` vectors whose active entries are exactly zero, so the returned ``y``
    vanish exactly on ``facets``.
    """
    verts = P.face_vertices(facets)
    if not verts:
        raise ValueError(f"facets {tuple(facets)} do not meet")
    w = rng.dirichlet(np.ones(len(verts)), size=count)
    return w @ P.vertex_y[verts]


def interior_points(P, count, rng, max_trials=None):
    """Uniform points of ``P`` by rejection from the vertex bounding box, as ``y`` vectors."""
    lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
    max_trials = max(10_000, 1000 * count) if max_trials is None else max_trials
    out, trials = [], 0
    while sum(len(o) for o in out) < count:
        batch = max(64, 2 * count)
        trials += batch
        if trials > max_trials:
            raise RejectionBudgetExceeded(f"acceptance too low after {trials} trials")
        x = rng.uniform(lo, hi, size=(batch, P.n))
        y = embed_jP(P, x)
        out.append(y[np.all(y > 0, axis=1)])
    return np.concatenate(out)[:count]


def codim2_faces(P):
    return [S for S in combinations(range(P.m), 2) if P.n >= 2 and P.is_face(S)]


def stratified_y(P, count, rng, include_vertices=True):
    """``count`` points of ``j_P(P)`` spread over vertices, codim-2 faces, facets and the interior."""
    parts = []
    if include_vertices:
        nv = min(len(P.vertices), count // 4)
        if nv:
            parts.append(P.vertex_y[rng.permutation(len(P.vertices))[:nv]]
                         if nv < len(P.vertices) else np.array(P.vertex_y))
    rest = count - sum(len(p) for p in parts)
    faces2 = codim2_faces(P)
    n2 = rest // 5 if faces2 else 0
    n1 = (3 * rest) // 10
    n0 = rest - n1 - n2
    if n2:
        idx = rng.integers(len(faces2), size=n2)
        parts.extend(face_points(P, faces2[i], 1, rng) for i in idx)
    if n1:
        idx = rng.integers(P.m, size=n1)
        parts.extend(face_points(P, (int(i),), 1, rng) for i in idx)
    if n0:
        parts.append(interior_points(P, n0, rng))
    return np.concatenate(parts)[:count]


def sample_points(P, QS, count, seed=0, include_vertices=True, random_signs=True):
    """Deterministic stratified probe points on the real moment-angle manifold.

    Returns an array of shape ``(count, m)``; each row is a lifted point of
    ``P`` with a random sign vector applied.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    y = stratified_y(P, count, rng, include_vertices)
    U = np.sqrt(y)
    if random_signs:
        U = U * rng.choice([-1.0, 1.0], size=U.shape)
    return U
