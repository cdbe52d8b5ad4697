"""Collars of facets and the linear-to-quadratic corner diffeomorphism.

The collar of facet ``F_i`` is the flow of a vector field ``w_i``. Near each
vertex ``v`` on ``F_i`` the natural choice is the coordinate field
``d/dy_i`` of the linear chart, i.e. the column of ``inv(A_v)`` belonging to
``i``. These are blended with the partition of unity

    psi_v(x) = prod_{j not in omega_v} y_j(x) / normaliser,

which is supported exactly on the open vertex star ``P_v``. Because every
chart field satisfies ``a_i . w = 1`` and ``a_j . w = 0`` for the other
facets at ``v``, the blend keeps ``a_i . w_i = 1`` everywhere, and
``a_j . w_i`` carries a factor ``y_j``. So the collar parameter of a point
is its value of ``y_i``, facets are invariant under every flow and flows
never leave ``P``.

Blended fields of different facets commute only in special cases (products
of intervals); in general the consistency residual is measured and
reported.
"""

from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np
from scipy.optimize import linprog

from .errors import LeftPolytope, MonotonicityFailure, WidthTooLarge
from .geometry import embed_jP, project_to_base
from .manifold import face_points, interior_points

RK4_STEPS = 64
FD_STEP = 1e-5


# smoothing function

def _bump(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1; returns value and derivative."""
    s = np.asarray(s, dtype=float)
    f0, f1 = _bump(s), _bump(1.0 - s)
    den = f0 + f1
    beta = f0 / den
    with np.errstate(divide="ignore", invalid="ignore"):
        d0 = np.where(s > 0, f0 / np.where(s > 0, s * s, 1.0), 0.0)
        d1 = np.where(s < 1, f1 / np.where(s < 1, (1 - s) ** 2, 1.0), 0.0)
    dbeta = (d0 * f1 + f0 * d1) / (den * den)
    return beta, dbeta


@dataclass(frozen=True)
class SmoothingFunction:
    """``xi(t) = t**2`` below ``delta/10``, ``t`` above ``delta/2``, smooth monotone blend between."""

    delta: float

    @property
    def lo(self):
        return self.delta / 10.0

    @property
    def hi(self):
        return self.delta / 2.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t < self.lo, t * t, t)
        mid = (t >= self.lo) & (t <= self.hi)
        if np.any(mid):
            tm = t[mid]
            beta, _ = _smooth_step((tm - self.lo) / (self.hi - self.lo))
            out = np.array(out, dtype=float)
            out[mid] = (1.0 - beta) * tm * tm + beta * tm
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t < self.lo, 2.0 * t, 1.0)
        mid = (t >= self.lo) & (t <= self.hi)
        if np.any(mid):
            tm = t[mid]
            width = self.hi - self.lo
            beta, dbeta = _smooth_step((tm - self.lo) / width)
            out = np.array(out, dtype=float)
            out[mid] = (1.0 - beta) * 2.0 * tm + beta + dbeta / width * (tm - tm * tm)
        return out if out.ndim else float(out)

    def inverse(self, s):
        """Monotone inverse: closed form outside the blend window, bisection then Newton inside."""
        s = np.asarray(s, dtype=float)
        out = np.where(s < self.lo ** 2, np.sqrt(np.maximum(s, 0.0)), s)
        mid = (s >= self.lo ** 2) & (s <= self.hi)
        if np.any(mid):
            target = s[mid]
            a = np.full_like(target, self.lo)
            b = np.full_like(target, self.hi)
            for _ in range(60):
                c = 0.5 * (a + b)
                below = self(c) < target
                a = np.where(below, c, a)
                b = np.where(below, b, c)
            t = 0.5 * (a + b)
            for _ in range(3):
                t = np.clip(t - (self(t) - target) / self.derivative(t), self.lo, self.hi)
            out = np.array(out, dtype=float)
            out[mid] = t
        return out if out.ndim else float(out)


def make_xi(delta, grid=10_000):
    """Build the smoothing function and check monotonicity on a grid over ``(0, delta]``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    xi = SmoothingFunction(float(delta))
    t = np.linspace(0.0, delta, grid + 1)[1:]
    d = xi.derivative(t)
    if np.any(d <= 0):
        bad = float(t[np.argmax(d <= 0)])
        raise MonotonicityFailure(f"xi' <= 0 at t = {bad:.6g}; use a smaller delta")
    v = xi(t)
    if np.any(np.diff(v) <= 0):
        raise MonotonicityFailure("xi is not increasing on the check grid")
    return xi


# collar fields and flows

def safe_width(P):
    """Default collar width: a tenth of the smallest ``b~ / |a~|`` over all vertex charts."""
    vals = [chart.b_tilde[k] / np.linalg.norm(chart.a_tilde[k])
            for chart in P.charts for k in range(len(chart.complement))]
    return 0.1 * float(min(vals))


def minimal_nonfaces(P):
    out = []
    for k in range(2, P.n + 2):
        for S in combinations(range(P.m), k):
            if P.is_face(S):
                continue
            if all(P.is_face(T) for T in combinations(S, k - 1)):
                out.append(S)
    return out


def separation_width(P):
    """Largest width for which collars of facets with no common point have disjoint images.

    For each minimal non-face ``S`` an LP gives ``min_P max_{i in S} y_i``.
    """
    best = np.inf
    for S in minimal_nonfaces(P):
        # variables (x, s): minimise s with a_i x + b_i <= s (i in S), x in P
        c = np.zeros(P.n + 1)
        c[-1] = 1.0
        A_ub = np.vstack([np.hstack([P.A[list(S)], -np.ones((len(S), 1))]),
                          np.hstack([-P.A, np.zeros((P.m, 1))])])
        b_ub = np.concatenate([-P.b[list(S)], P.b])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (P.n + 1), method="highs")
        best = min(best, float(res.fun))
    return best


@dataclass(frozen=True, eq=False)
class CollarSystem:
    """Collars of all facets of ``P`` with common width ``delta``.

    Flows are integrated in the slack coordinates ``y = A x + b``, where the
    field of facet ``i`` has ``dy_i/dt = 1`` and ``dy_j/dt`` carrying an exact
    factor ``y_j``. Points close to a wall thus keep full relative precision
    in their distance to it, and points on a wall stay on it exactly.
    """

    P: object
    delta: float
    steps: int = RK4_STEPS
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        data = []
        for i in range(self.P.m):
            charts = [c for c in self.P.charts if i in c.omega]
            comps = np.array([c.complement for c in charts], dtype=int)
            cols = np.array([c.A_v_inv[:, c.position(i)] for c in charts])
            D = cols @ self.P.A.T
            for k, c in enumerate(charts):
                D[k, list(c.omega)] = 0.0
                D[k, i] = 1.0
            data.append((comps, cols, D))
        object.__setattr__(self, "_fields", tuple(data))

    def _weights(self, i, Y):
        comps = self._fields[i][0]
        W = np.prod(np.maximum(Y, 0.0)[:, comps], axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            # all weights vanish only outside P; the NaN marks that
            return W / W.sum(axis=1, keepdims=True)

    def field(self, i, X):
        """Blended collar field ``w_i`` at points ``X`` (shape ``(N, n)``)."""
        return self._weights(i, embed_jP(self.P, np.atleast_2d(X))) @ self._fields[i][1]

    def field_y(self, i, Y):
        """The same field pushed to slack coordinates, ``A w_i``."""
        return self._weights(i, Y) @ self._fields[i][2]

    def flow_y(self, i, Y, t):
        """Time-``t`` flow in slack coordinates by RK4 with ``steps`` equal steps (``t`` may be per point)."""
        Y = np.array(np.atleast_2d(Y), dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), (Y.shape[0],))
        if not np.any(t):
            return Y
        y_i = Y[:, i] + t
        dt = (t / self.steps)[:, None]
        for _ in range(self.steps):
            k1 = self.field_y(i, Y)
            k2 = self.field_y(i, Y + 0.5 * dt * k1)
            k3 = self.field_y(i, Y + 0.5 * dt * k2)
            k4 = self.field_y(i, Y + dt * k3)
            Y = Y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Y[:, i] = y_i  # the collar parameter is exact
        return Y

    def flow(self, i, X, t):
        """Time-``t`` flow of ``w_i`` on points ``X`` of ``P``."""
        if not np.any(t):
            return np.array(np.atleast_2d(X), dtype=float)
        return project_to_base(self.P, self.flow_y(i, embed_jP(self.P, np.atleast_2d(X)), t))

    def collar(self, i, x, t):
        """``phi_i(x, t)`` for ``x`` on facet ``i``."""
        return self.flow(i, x, t)

    def retract_y(self, i, Y):
        """Collar coordinates in slack form: (foot point on ``F_i``, ``t = y_i``)."""
        Y = np.atleast_2d(Y)
        t = np.maximum(Y[:, i], 0.0)
        return self.flow_y(i, Y, -t), t


def _facet_probe_y(P, i, count, rng):
    """``y`` vectors on facet ``i``: its vertices, relative-interior points and lower faces."""
    parts = [P.vertex_y[P.face_vertices((i,))]]
    parts.append(face_points(P, (i,), count, rng))
    for j in range(P.m):
        if j != i and P.is_face((i, j)):
            parts.append(face_points(P, (i, j), max(1, count // 4), rng))
    return np.concatenate(parts)


def _to_x(P, y):
    return project_to_base(P, y)


def build_collars(P, delta=None, steps=RK4_STEPS, probes=8, seed=0, check=True):
    """Collars of every facet, with the collar axioms checked on a probe grid.

    Raises :class:`WidthTooLarge` if a flow leaves ``P``, fails to preserve a
    face or degenerates. The returned system carries a ``diagnostics`` dict
    with the worst residuals and the pairwise consistency residuals.
    """
    delta = safe_width(P) if delta is None else float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    CS = CollarSystem(P, delta, steps)
    if not check:
        return CS
    rng = np.random.default_rng(seed)
    ts = np.concatenate([np.linspace(0.0, delta, 9)[:-1], [0.999 * delta]])
    tol_in = 1e-9 * (1.0 + float(np.abs(P.b).max()))
    worst = {"identity_at_zero": 0.0, "collar_parameter": 0.0, "face_preservation": 0.0,
             "min_inequality": np.inf}
    for i in range(P.m):
        y0 = _facet_probe_y(P, i, probes, rng)
        on = y0 == 0.0
        for t in ts:
            y = CS.flow_y(i, y0, t)
            if not np.all(np.isfinite(y)):
                raise WidthTooLarge(f"collar field of facet {i} degenerates before t = {t:.3g}")
            if t == 0.0:
                worst["identity_at_zero"] = max(worst["identity_at_zero"], float(np.abs(y - y0).max()))
            worst["collar_parameter"] = max(worst["collar_parameter"], float(np.abs(y[:, i] - t).max()))
            others = on.copy()
            others[:, i] = False
            if np.any(others):
                worst["face_preservation"] = max(worst["face_preservation"],
                                                 float(np.abs(y[others]).max()))
            worst["min_inequality"] = min(worst["min_inequality"], float(y.min()))
    if worst["identity_at_zero"] != 0.0:
        raise WidthTooLarge("collar is not the identity at t = 0")
    if worst["collar_parameter"] > 1e-9:
        raise WidthTooLarge(f"collar parameter drifts by {worst['collar_parameter']:.3g}")
    if worst["face_preservation"] > 1e-8:
        raise WidthTooLarge(f"faces not preserved: residual {worst['face_preservation']:.3g}")
    if worst["min_inequality"] < -tol_in:
        raise WidthTooLarge(f"collar leaves P by {-worst['min_inequality']:.3g}")
    pairs = {}
    for i, j in combinations(range(P.m), 2):
        pairs[f"{i},{j}"] = consistency_residual(CS, i, j, probes, rng)
    CS.diagnostics.update(worst)
    CS.diagnostics["consistency"] = pairs
    CS.diagnostics["max_consistency"] = max(pairs.values(), default=0.0)
    return CS


def consistency_residual(CS, i, j, probes=8, rng=None, t_max=None):
    """Largest gap between ``phi_j(phi_i(x, t1), t2)`` and ``phi_i(phi_j(x, t2), t1)``.

    ``x`` runs over points of ``F_i & F_j`` and ``t1, t2`` over ``[0, t_max)``
    (default ``delta/2``). Disjoint facets are consistent by definition.
    """
    P = CS.P
    if not P.is_face((i, j)):
        return 0.0
    rng = np.random.default_rng(0) if rng is None else rng
    t_max = CS.delta / 2 if t_max is None else t_max
    y = np.concatenate([P.vertex_y[P.face_vertices((i, j))], face_points(P, (i, j), probes, rng)])
    X = _to_x(P, y)
    t1 = rng.uniform(0, t_max, size=len(X))
    t2 = rng.uniform(0, t_max, size=len(X))
    a = CS.collar(j, CS.collar(i, X, t1), t2)
    b = CS.collar(i, CS.collar(j, X, t2), t1)
    return float(np.max(np.linalg.norm(a - b, axis=1)))


def multicollar(CS, facets, x, t, order_samples=24, seed=0):
    """``phi_{i1..ik}(x, t)``: apply the induced collar of ``facets[-1]`` first and of ``facets[0]`` last.

    Returns ``(point, order_residual)``, the residual being the largest
    deviation over (up to ``order_samples``) reorderings of the facets, each
    keeping its own time.
    """
    facets = list(facets)
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(facets),))
    if np.any(t < 0) or np.any(t >= CS.delta):
        raise ValueError("collar times must lie in [0, delta)")
    P = CS.P

    def run(order):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        for k in reversed(order):
            X = CS.collar(facets[k], X, t[k])
        return X[0]

    point = run(list(range(len(facets))))
    y = embed_jP(P, point)
    if not np.all(np.isfinite(y)) or np.any(y < -1e-9 * (1 + np.abs(P.b).max())):
        raise LeftPolytope(f"multicollar left P (min inequality {float(np.min(y)):.3g})")
    orders = list(permutations(range(len(facets))))
    if len(orders) > order_samples:
        rng = np.random.default_rng(seed)
        orders = [orders[k] for k in rng.choice(len(orders), order_samples, replace=False)]
    resid = max(float(np.max(np.abs(run(list(o)) - point))) for o in orders)
    return point, resid


# the corner diffeomorphism

class StructureDiffeo:
    """Diffeomorphism from ``P`` with linear corners to ``P`` with quadratic corners.

    Realised as the ordered composition over facets ``0..m-1`` of the single
    collar reparametrisations ``phi_i(z, t) -> phi_i(z, xi(t))``. Each factor
    is the identity wherever ``y_i >= delta/2``. With commuting collars this
    is the multicollar map ``(z, t_1..t_k) -> (z, xi(t_1)..xi(t_k))``; in
    general the composition stays exactly invertible.

    ``on_y`` and ``inverse_on_y`` act on slack vectors; calling the object
    or ``inverse`` acts on points of ``R^n``.
    """

    def __init__(self, CS, xi):
        self.CS = CS
        self.xi = xi

    def _step(self, i, Y, fn):
        act = Y[:, i] < self.xi.hi
        if np.any(act):
            foot, t = self.CS.retract_y(i, Y[act])
            Y = Y.copy()
            Y[act] = self.CS.flow_y(i, foot, fn(t))
        return Y

    def on_y(self, Y):
        Y = np.array(np.atleast_2d(Y), dtype=float)
        for i in range(self.CS.P.m):
            Y = self._step(i, Y, self.xi)
        return Y

    def inverse_on_y(self, Y):
        Y = np.array(np.atleast_2d(Y), dtype=float)
        for i in reversed(range(self.CS.P.m)):
            Y = self._step(i, Y, self.xi.inverse)
        return Y

    def __call__(self, X):
        P = self.CS.P
        return project_to_base(P, self.on_y(embed_jP(P, np.atleast_2d(X))))

    def inverse(self, X):
        P = self.CS.P
        return project_to_base(P, self.inverse_on_y(embed_jP(P, np.atleast_2d(X))))


def linear_to_quadratic_F(CS, xi, p):
    """Image of points ``p`` under the corner diffeomorphism (see :class:`StructureDiffeo`)."""
    out = StructureDiffeo(CS, xi)(p)
    return out[0] if np.ndim(p) == 1 else out


def quadratic_to_linear_F(CS, xi, p):
    out = StructureDiffeo(CS, xi).inverse(p)
    return out[0] if np.ndim(p) == 1 else out


def collar_probes(P, delta, count, seed=0):
    """Points of ``P`` concentrated in the collars: faces, near-wall points and interior points."""
    rng = np.random.default_rng(seed)
    CS = CollarSystem(P, delta)
    n_near = count // 2
    n_face = count // 4
    n_int = count - n_near - n_face
    parts = []
    idx = rng.integers(P.m, size=n_face)
    for i in range(P.m):
        k = int(np.sum(idx == i))
        if k:
            parts.append(_to_x(P, _facet_probe_y(P, i, k, rng)[-k:]))
    idx = rng.integers(P.m, size=n_near)
    for i in range(P.m):
        k = int(np.sum(idx == i))
        if k:
            base = _to_x(P, face_points(P, (i,), k, rng))
            parts.append(CS.flow(i, base, rng.uniform(0, delta * 0.9, size=k)))
    parts.append(_to_x(P, interior_points(P, n_int, rng)))
    return np.concatenate(parts)[:count]


# C1 verification

def batched_jacobians(f, Y, tags, h=FD_STEP):
    """Finite-difference Jacobians of ``f(Y, tags)`` at every row of ``Y``, in one batched call.

    Coordinates closer than ``2h`` to a wall use the one-sided three-point
    stencil, the others central differences.
    """
    N, n = Y.shape
    pts, rows, cols, wts = [], [], [], []
    for r in range(n):
        e = np.zeros(n)
        e[r] = h
        one = Y[:, r] < 2 * h
        for shift, w_one, w_cen in ((0, -3.0, 0.0), (1, 4.0, 1.0), (2, -1.0, 0.0), (-1, 0.0, -1.0)):
            w = np.where(one, w_one, w_cen) / (2 * h)
            keep = w != 0
            pts.append(Y[keep] + shift * e)
            rows.append(np.flatnonzero(keep))
            cols.append(np.full(int(keep.sum()), r))
            wts.append(w[keep])
    rows, cols, wts = (np.concatenate(a) for a in (rows, cols, wts))
    vals = f(np.concatenate(pts), tags[rows])
    J = np.zeros((N, vals.shape[1], n))
    np.add.at(J, (rows, slice(None), cols), wts[:, None] * vals)
    return J


def c1_residuals(f, Y, tags, directions, h=FD_STEP, eta=None):
    """Gap between the Jacobian at each probe and its limit approached along a direction.

    ``directions`` is a list of ``(probe index, coordinate)`` pairs. The limit
    is Richardson-extrapolated from the Jacobians at ``eta`` and ``2 eta``
    (default ``10 h``) and the gap is scaled by ``1 + |J|``. Returns the
    per-pair residuals and the Jacobians at the probes.
    """
    eta = 10 * h if eta is None else eta
    J = batched_jacobians(f, Y, tags, h)
    idx = np.array([p for p, _ in directions], dtype=int)
    E = np.zeros((len(directions), Y.shape[1]))
    E[np.arange(len(directions)), [r for _, r in directions]] = eta
    J1 = batched_jacobians(f, Y[idx] + E, tags[idx], h)
    J2 = batched_jacobians(f, Y[idx] + 2 * E, tags[idx], h)
    lim = 2.0 * J1 - J2
    scale = 1.0 + np.abs(J[idx]).max(axis=(1, 2))
    return np.abs(J[idx] - lim).max(axis=(1, 2)) / scale, J


def verify_structure_diffeo(P, CS, xi, probes=6, seed=0, h=None, F=None):
    """Check that ``F`` is C1 from linear source charts to quadratic target charts.

    Probes are points on every facet and codimension-2 face, plus points at
    distance ``delta/20`` inside each facet. At each probe the map is written
    in the linear chart ``y_v`` of a vertex ``v`` of its face and the quadratic
    chart ``sqrt(y_v)`` at the same vertex. Returns a report with the worst C1
    residual and the smallest Jacobian determinant.

    The finite-difference step defaults to ``delta * 1e-5``: the blend of
    ``xi`` lives on a window of width ``0.4 delta``, and a step that is not
    small against it leaves truncation errors of the size being tested.
    """
    F = StructureDiffeo(CS, xi) if F is None else F
    h = CS.delta * FD_STEP if h is None else h
    rng = np.random.default_rng(seed)
    Ys, vs, dirs, full = [], [], [], []
    for i in range(P.m):
        y_wall = _facet_probe_y(P, i, probes, rng)
        y_near = CS.flow_y(i, y_wall, CS.delta / 20)
        for y in np.concatenate([y_wall, y_near]):
            S = [j for j in range(P.m) if y[j] == 0.0] or [i]
            chart = P.charts[P.face_vertices(S)[0]]
            yv = y[list(chart.omega)]
            k = len(Ys)
            dirs.extend((k, r) for r in (np.flatnonzero(yv == 0.0).tolist() or [chart.position(i)]))
            Ys.append(yv)
            vs.append(chart.vertex)
            full.append(y)
    Y, tags = np.array(Ys), np.array(vs)
    omegas = np.array([c.omega for c in P.charts])
    inv = np.array([c.A_v_inv for c in P.charts])
    bv = np.array([c.b_v for c in P.charts])

    def H(Z, tags):
        # linear source chart in, quadratic target chart out
        Ys = embed_jP(P, np.einsum("kij,kj->ki", inv[tags], Z - bv[tags]))
        np.put_along_axis(Ys, omegas[tags], Z, axis=1)
        out = np.take_along_axis(F.on_y(Ys), omegas[tags], axis=1)
        return np.sqrt(np.maximum(out, 0.0))

    res, J = c1_residuals(H, Y, tags, dirs, h)
    det = np.abs(np.linalg.det(J))
    k = int(np.argmax(res))
    worst = float(res[k])
    return {"probes": len(Y), "step": h, "max_c1_residual": worst,
            "worst_probe": full[dirs[k][0]].tolist(), "min_abs_det": float(det.min()),
            "ok": bool(worst < 1e-4 and det.min() > 1e-8)}


def round_trip_residual(F, X):
    """``max |F^-1(F(x)) - x|`` with the intermediate point kept in slack coordinates.

    Rounding the intermediate point to ``R^n`` would add an error of order
    ``sqrt(eps)`` near walls, since the inverse undoes a quadratic corner.
    """
    P = F.CS.P
    X = np.atleast_2d(X)
    back = project_to_base(P, F.inverse_on_y(F.on_y(embed_jP(P, X))))
    return float(np.max(np.abs(back - X)))


def face_preservation_residual(F, probes=8, seed=0):
    """Largest slack value that ``F`` gives on a facet, over points of that facet."""
    P = F.CS.P
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(P.m):
        Y = F.on_y(_facet_probe_y(P, i, probes, rng))
        worst = max(worst, float(np.abs(Y[:, i]).max()))
    return worst


def collar_check(P, delta=None, probes=500, seed=0, harness_probes=6):
    """Collar construction plus the corner diffeomorphism checks, as a report dict."""
    CS = build_collars(P, delta, seed=seed)
    xi = make_xi(CS.delta)
    F = StructureDiffeo(CS, xi)
    X = collar_probes(P, CS.delta, probes, seed)
    t = np.linspace(0.0, CS.delta, 1001)[:-1]
    c1 = verify_structure_diffeo(P, CS, xi, harness_probes, seed)
    return {
        "delta": CS.delta,
        "safe_width": safe_width(P),
        "separation_width": separation_width(P),
        "collar": {k: v for k, v in CS.diagnostics.items() if k != "consistency"},
        "consistency": CS.diagnostics["consistency"],
        "xi_round_trip": float(np.max(np.abs(xi.inverse(xi(t)) - t))),
        "F_round_trip": round_trip_residual(F, X),
        "F_face_preservation": face_preservation_residual(F, seed=seed),
        "c1": c1,
    }
