"""Simple convex polytopes in H-representation.

A polytope is ``P = {x in R^n : A x + b >= 0}`` with ``m`` facet inequalities.
Facets and vertices are indexed from 0. For a vertex ``v`` the sorted tuple
``omega[v]`` lists the ``n`` facets containing it.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, permutations, product
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from . import exact
from .errors import (
    Empty,
    InputParseError,
    NotEquivalent,
    NotFullRank,
    NotInImage,
    NotSimple,
    RedundantFacet,
    SearchBudgetExceeded,
    SingularChartMatrix,
    Unbounded,
)

TAU_MERGE = 1e-8
TAU_AFF = 1e-8


def activity_tolerance(b):
    """Absolute activity tolerance, relative to the size of the offsets."""
    return 1e-9 * (1.0 + float(np.max(np.abs(b), initial=0.0)))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VertexChart:
    """Linear chart data at a vertex.

    ``a_tilde[k]`` and ``b_tilde[k]`` describe facet ``complement[k]`` as an
    affine function of the local coordinates ``y_v = A_v x + b_v``.
    """

    vertex: int
    omega: tuple
    complement: tuple
    A_v: np.ndarray
    A_v_inv: np.ndarray
    b_v: np.ndarray
    a_tilde: np.ndarray
    b_tilde: np.ndarray

    def position(self, facet):
        """Index of ``facet`` inside ``omega``."""
        return self.omega.index(facet)

    def local_coords(self, x):
        """Linear coordinates ``y_v`` of points ``x`` (shape ``(..., n)``)."""
        return np.asarray(x, dtype=float) @ self.A_v.T + self.b_v

    def point(self, y_v):
        """Inverse of :meth:`local_coords`."""
        return (np.asarray(y_v, dtype=float) - self.b_v) @ self.A_v_inv.T


@dataclass(frozen=True, eq=False)
class Polytope:
    """A validated simple polytope. Build it with :func:`validate_hrep`."""

    A: np.ndarray
    b: np.ndarray
    vertices: np.ndarray
    incidence: tuple
    name: str = ""
    exact_data: tuple = field(default=None, repr=False)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def tau_act(self):
        return activity_tolerance(self.b)

    @cached_property
    def charts(self):
        return tuple(vertex_chart(self, v) for v in range(len(self.vertices)))

    @cached_property
    def vertex_y(self):
        """``j_P`` of every vertex with the active coordinates set to exactly 0."""
        Y = self.vertices @ self.A.T + self.b
        for v, om in enumerate(self.incidence):
            Y[v, list(om)] = 0.0
        Y = np.maximum(Y, 0.0)
        Y.setflags(write=False)
        return Y

    def facet_degrees(self):
        deg = [0] * self.m
        for om in self.incidence:
            for i in om:
                deg[i] += 1
        return deg

    def face_vertices(self, facets):
        """Vertices lying on every facet in ``facets`` (empty if not a face)."""
        S = set(facets)
        return [v for v, om in enumerate(self.incidence) if S <= set(om)]

    def is_face(self, facets):
        return bool(self.face_vertices(facets))

    def contains(self, x, tol=None):
        tol = self.tau_act if tol is None else tol
        y = np.asarray(x, dtype=float) @ self.A.T + self.b
        return np.all(y >= -tol, axis=-1)

    def permute_facets(self, perm, name=None):
        """New polytope whose facet ``i`` is facet ``perm[i]`` of this one."""
        perm = list(perm)
        if sorted(perm) != list(range(self.m)):
            raise ValueError(f"not a permutation of range({self.m}): {perm}")
        inv = np.argsort(perm)
        incidence = tuple(tuple(sorted(int(inv[i]) for i in om)) for om in self.incidence)
        ex = None
        if self.exact_data is not None:
            eA, eb = self.exact_data
            ex = (tuple(eA[p] for p in perm), tuple(eb[p] for p in perm))
        return Polytope(_frozen(self.A[perm]), _frozen(self.b[perm]), self.vertices,
                        incidence, self.name if name is None else name, ex)

    def __repr__(self):
        return f"Polytope(name={self.name!r}, m={self.m}, n={self.n}, vertices={len(self.vertices)})"


def enumerate_vertices(A, b, tau_act=None, tau_merge=TAU_MERGE):
    """All vertices of ``{A x + b >= 0}`` by solving every ``n``-subset of facets.

    Returns a list of ``(x, omega)`` sorted by ``omega``; ``omega`` is the set of
    all facets active at ``x`` within ``tau_act``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    tau_act = activity_tolerance(b) if tau_act is None else tau_act
    found = []
    for S in combinations(range(m), n):
        sub = A[list(S)]
        if abs(np.linalg.det(sub)) < 1e-12 * max(1.0, np.abs(sub).max()) ** n:
            continue
        x = np.linalg.solve(sub, -b[list(S)])
        y = A @ x + b
        if np.any(y < -tau_act):
            continue
        if any(np.max(np.abs(x - x2)) <= tau_merge for x2, _ in found):
            continue
        omega = tuple(int(i) for i in np.flatnonzero(np.abs(y) <= tau_act))
        found.append((x, omega))
    found.sort(key=lambda t: t[1])
    return found


def _is_bounded(A):
    # P is bounded iff the recession cone {d : A d >= 0} is {0}; with rank A = n a
    # nonzero d gives A d != 0, so it is enough to look for A d >= 0, sum(A d) = 1.
    m, n = A.shape
    res = linprog(np.zeros(n), A_ub=-A, b_ub=np.zeros(m),
                  A_eq=A.sum(axis=0, keepdims=True), b_eq=[1.0],
                  bounds=[(None, None)] * n, method="highs")
    return res.status == 2


def validate_hrep(A, b, name="", exact_data=None):
    """Validate an H-representation and return a :class:`Polytope`.

    Raises one of :class:`NotFullRank`, :class:`Empty`, :class:`Unbounded`,
    :class:`NotSimple` or :class:`RedundantFacet`.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"A has {m} rows but b has {b.shape[0]} entries")
    if n < 1 or m < n + 1:
        raise ValueError(f"need n >= 1 and m >= n + 1, got m={m}, n={n}")
    if np.linalg.matrix_rank(A) < n:
        raise NotFullRank(f"rank(A) < n = {n}")
    verts = enumerate_vertices(A, b)
    if not verts:
        raise Empty("no feasible vertex: the polytope is empty")
    if not _is_bounded(A):
        raise Unbounded("the recession cone {d : A d >= 0} is nontrivial")
    for x, om in verts:
        if len(om) > n:
            raise NotSimple(f"vertex {x.tolist()} lies on {len(om)} > {n} facets {om}")
    used = set().union(*(om for _, om in verts))
    missing = sorted(set(range(m)) - used)
    if missing:
        raise RedundantFacet(f"facets {missing} are active at no vertex")
    if len(verts) < n + 1:
        raise Empty(f"only {len(verts)} vertices; the polytope is not full-dimensional")
    return Polytope(_frozen(A), _frozen(b), _frozen(np.array([x for x, _ in verts])),
                    tuple(om for _, om in verts), name, exact_data)


def vertex_chart(P, v):
    """Chart data at vertex ``v``: ``A_v``, its inverse and the functionals of the other facets."""
    omega = tuple(P.incidence[v])
    comp = tuple(j for j in range(P.m) if j not in omega)
    A_v = P.A[list(omega)]
    b_v = P.b[list(omega)]
    try:
        A_v_inv = np.linalg.inv(A_v)
    except np.linalg.LinAlgError as exc:
        raise SingularChartMatrix(f"A_v singular at vertex {v}") from exc
    if np.linalg.cond(A_v) > 1e12:
        raise SingularChartMatrix(f"A_v ill-conditioned at vertex {v}")
    a_tilde = P.A[list(comp)] @ A_v_inv
    b_tilde = P.b[list(comp)] - a_tilde @ b_v
    return VertexChart(v, omega, comp, _frozen(A_v), _frozen(A_v_inv), _frozen(b_v),
                       _frozen(a_tilde.reshape(len(comp), P.n)), _frozen(b_tilde))


def embed_jP(P, x):
    """``y_i = a_i x + b_i``; works on a point or a batch of points."""
    return np.asarray(x, dtype=float) @ P.A.T + P.b


def project_to_base(P, y, tol=None, return_residual=False):
    """Least-squares left inverse of :func:`embed_jP`.

    Raises :class:`NotInImage` when ``y`` is farther than ``tol`` from the
    affine image of ``R^n``.
    """
    y = np.asarray(y, dtype=float)
    rhs = (y - P.b).T
    x, *_ = np.linalg.lstsq(P.A, rhs, rcond=None)
    x = x.T
    resid = np.max(np.abs(x @ P.A.T + P.b - y), axis=-1)
    if tol is None:
        tol = TAU_AFF * (1.0 + np.max(np.abs(y), axis=-1))
    if np.any(resid > tol):
        raise NotInImage(f"point is {float(np.max(resid)):.3g} away from j_P(R^n)")
    return (x, resid) if return_residual else x


# combinatorics

@dataclass(frozen=True)
class CombinatorialType:
    """Vertex-facet incidence up to relabelling of facets and vertices."""

    m: int
    n: int
    canonical: tuple

    def __str__(self):
        return f"m={self.m} n={self.n} " + " ".join(
            "{" + ",".join(map(str, om)) + "}" for om in self.canonical)


def _relabelings(P, budget):
    # facet relabelings that order facets by degree; only orderings inside each
    # degree class are searched
    deg = P.facet_degrees()
    classes = [sorted(i for i in range(P.m) if deg[i] == d) for d in sorted(set(deg))]
    count = 1
    for c in classes:
        for k in range(2, len(c) + 1):
            count *= k
    if count > budget:
        raise SearchBudgetExceeded(f"{count} relabelings exceed the budget of {budget}")
    for parts in product(*(permutations(c) for c in classes)):
        order = [i for part in parts for i in part]
        label = [0] * P.m
        for new, old in enumerate(order):
            label[old] = new
        yield label


def combinatorial_type(P, budget=200_000):
    """Canonical form of the incidence structure: equal forms iff combinatorially equivalent."""
    best = None
    for label in _relabelings(P, budget):
        form = tuple(sorted(tuple(sorted(label[i] for i in om)) for om in P.incidence))
        if best is None or form < best:
            best = form
    return CombinatorialType(P.m, P.n, best)


def _check_bijection(P, Q, sigma):
    if sorted(sigma) != list(range(Q.m)):
        return False
    target = {frozenset(om) for om in Q.incidence}
    image = {frozenset(sigma[i] for i in om) for om in P.incidence}
    return image == target


def iter_isomorphisms(P, Q):
    """Yield every facet bijection ``sigma`` (``sigma[i]`` = facet of Q) carrying P's incidence onto Q's."""
    if (P.m, P.n, len(P.incidence)) != (Q.m, Q.n, len(Q.incidence)):
        return
    degP, degQ = P.facet_degrees(), Q.facet_degrees()
    if sorted(degP) != sorted(degQ):
        return
    target = {frozenset(om) for om in Q.incidence}
    order = sorted(range(P.m), key=lambda i: (-degP[i], i))
    # vertices of P that become fully assigned after placing order[k]
    pos = {f: k for k, f in enumerate(order)}
    closing = [[] for _ in range(P.m)]
    for om in P.incidence:
        closing[max(pos[i] for i in om)].append(om)
    sigma = [None] * P.m
    used = [False] * Q.m

    def extend(k):
        if k == P.m:
            yield tuple(sigma)
            return
        f = order[k]
        for g in range(Q.m):
            if used[g] or degQ[g] != degP[f]:
                continue
            sigma[f] = g
            if all(frozenset(sigma[i] for i in om) in target for om in closing[k]):
                used[g] = True
                yield from extend(k + 1)
                used[g] = False
        sigma[f] = None

    yield from extend(0)


def match_combinatorics(P, Q, hint=None, max_facets=10):
    """Facet bijection carrying the incidence structure of P onto that of Q.

    With ``hint`` the given bijection is only verified. Without it the search
    is a pruned brute force, refused for ``m > max_facets``.
    """
    if hint is not None:
        hint = tuple(int(s) for s in hint)
        if len(hint) != P.m or not _check_bijection(P, Q, hint):
            raise NotEquivalent(f"hint {hint} does not map the incidence of P onto Q")
        return hint
    if (P.m, P.n) != (Q.m, Q.n):
        raise NotEquivalent(f"(m, n) differ: {(P.m, P.n)} vs {(Q.m, Q.n)}")
    if P.m > max_facets:
        raise SearchBudgetExceeded(f"m = {P.m} > {max_facets}; supply a hint")
    # prefer a bijection pairing identical inequalities (a relabelling of the
    # same polytope), then the identity, then the first one found
    ident = tuple(range(P.m))
    first = ident if _check_bijection(P, Q, ident) else None
    for k, sigma in enumerate(iter_isomorphisms(P, Q)):
        if _same_inequalities(P, Q, sigma):
            return sigma
        if first is None:
            first = sigma
        if k >= 5000:
            break
    if first is None:
        raise NotEquivalent("no facet bijection matches the incidence structures")
    return first


def _same_inequalities(P, Q, sigma):
    hp = np.hstack([P.A, P.b[:, None]])
    hq = np.hstack([Q.A, Q.b[:, None]])[list(sigma)]
    hp = hp / np.linalg.norm(hp, axis=1, keepdims=True)
    hq = hq / np.linalg.norm(hq, axis=1, keepdims=True)
    return bool(np.allclose(hp, hq, atol=1e-12))


# JSON i/o

def polytope_from_dict(data, name=None):
    try:
        facets = data["facets"]
        eA = tuple(tuple(exact.to_fraction(a) for a in f["a"]) for f in facets)
        eb = tuple(exact.to_fraction(f["b"]) for f in facets)
        dim = int(data.get("dim", len(eA[0])))
    except (KeyError, TypeError, ValueError, ZeroDivisionError, IndexError) as exc:
        raise InputParseError(f"malformed polytope description: {exc}") from exc
    if any(len(row) != dim for row in eA):
        raise InputParseError(f"every facet normal must have dim = {dim} entries")
    A = [[float(a) for a in row] for row in eA]
    b = [float(x) for x in eb]
    return validate_hrep(A, b, name=name or data.get("name", ""), exact_data=(eA, eb))


def polytope_to_dict(P):
    if P.exact_data is not None:
        eA, eb = P.exact_data
        facets = [{"a": [str(x) for x in row], "b": str(bi)} for row, bi in zip(eA, eb)]
    else:
        facets = [{"a": [repr(float(x)) for x in row], "b": repr(float(bi))}
                  for row, bi in zip(P.A, P.b)]
    return {"name": P.name, "dim": P.n, "facets": facets}


def load_polytope(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputParseError(f"cannot read {path}: {exc}") from exc
    return polytope_from_dict(data, name=data.get("name") or path.stem)


def from_hrep(A, b, name=""):
    """Build a polytope from exact data (ints, Fractions or decimal strings)."""
    eA = tuple(tuple(exact.to_fraction(a) for a in row) for row in A)
    eb = tuple(exact.to_fraction(x) for x in b)
    return validate_hrep([[float(a) for a in row] for row in eA], [float(x) for x in eb],
                         name=name, exact_data=(eA, eb))
