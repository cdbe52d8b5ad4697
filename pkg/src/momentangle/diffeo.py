"""Base diffeomorphisms between polytopes and their sign lifts to the manifolds.

A base map ``g: P -> Q`` pairs facet ``i`` of ``P`` with facet ``sigma[i]`` of
``Q``. Internally ``Q`` is relabelled so that this pairing is the identity.
Every base map can be evaluated on points of ``R^n`` and on slack vectors
``y = A x + b``; the lift only uses the slack form,

    f(u)_j = sign(u_j) * sqrt(y'_j),    y' = g(u * u),

which depends on ``u`` only through ``|u_j|`` and ``sign(u_j)``.
"""

import json
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .atlas import _reconstruct
from .collar import StructureDiffeo, build_collars, make_xi, safe_width
from .errors import (C1Violation, ExternalMapError, MomentAngleError, NotAffinelyEquivalent,
                     TargetMembershipViolation)
from .gale import complement_matrix
from .geometry import embed_jP, iter_isomorphisms, project_to_base
from .manifold import face_points, interior_points, membership_residual, sample_points

TAU_FD = 1e-4
FD_STEP = 1e-5
TAU_LIFT = 1e-8
KINDS = ("affine", "structure-composite", "user-supplied")


def _same_data(P, Q):
    return P.A.shape == Q.A.shape and np.array_equal(P.A, Q.A) and np.array_equal(P.b, Q.b)


class BaseMap:
    """Facet-compatible map ``g: P -> Q``.

    Parameters
    ----------
    P, Q : Polytope
        Source and target, ``Q`` in its original facet order.
    forward, inverse : callable
        Batched maps on points of ``R^n`` (``inverse`` may be None).
    kind : str
        One of ``KINDS``.
    sigma : tuple, optional
        ``sigma[i]`` is the facet of ``Q`` paired with facet ``i`` of ``P``.
    forward_y, inverse_y : callable, optional
        Slack forms ``y_P -> y_Q`` (in the relabelled order of ``Q``). When
        omitted they are derived from the point forms.
    info : dict, optional
        JSON-friendly description of the map.

    Compatibility with the facets is not enforced here; see
    :meth:`facet_compatibility_residual`.
    """

    def __init__(self, P, Q, forward, inverse=None, kind="user-supplied", sigma=None,
                 forward_y=None, inverse_y=None, info=None):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        sigma = tuple(range(P.m)) if sigma is None else tuple(int(s) for s in sigma)
        if sorted(sigma) != list(range(Q.m)) or P.m != Q.m or P.n != Q.n:
            raise ValueError("sigma must be a bijection between the facets of P and Q")
        self.source = P
        self.target_original = Q
        self.sigma = sigma
        self.target = Q if sigma == tuple(range(Q.m)) else Q.permute_facets(sigma)
        self.kind = kind
        self._forward = forward
        self._inverse = inverse
        self._forward_y = forward_y
        self._inverse_y = inverse_y
        self.info = dict(info or {})

    def __call__(self, X):
        return self._forward(np.atleast_2d(np.asarray(X, dtype=float)))

    def on_y(self, Y):
        """Slack form of ``g``: slack vectors of ``P`` to slack vectors of ``Q``."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self._forward_y is not None:
            return self._forward_y(Y)
        return embed_jP(self.target, self(project_to_base(self.source, Y)))

    @property
    def invertible(self):
        return self._inverse is not None

    def inverse(self):
        """The inverse map ``Q -> P`` (with ``Q`` already relabelled)."""
        if self._inverse is None:
            raise ValueError("this base map has no inverse")
        return BaseMap(self.target, self.source, self._inverse, self._forward, self.kind,
                       forward_y=self._inverse_y, inverse_y=self._forward_y,
                       info={"inverse_of": self.describe()})

    def describe(self):
        return {"kind": self.kind, "source": self.source.name,
                "target": self.target_original.name, "sigma": list(self.sigma), **self.info}

    def facet_compatibility_residual(self, probes=16, seed=0):
        """Largest ``|y'_i(g(x))|`` over probe points ``x`` on facet ``i``."""
        P, rng = self.source, np.random.default_rng(seed)
        worst = 0.0
        for i in range(P.m):
            y = np.concatenate([P.vertex_y[P.face_vertices((i,))], face_points(P, (i,), probes, rng)])
            gx = self(project_to_base(P, y))
            worst = max(worst, float(np.abs(embed_jP(self.target, gx)[:, i]).max()))
        return worst

    def bijectivity_residual(self, X):
        """``max |g^-1(g(x)) - x|`` with the intermediate point in slack coordinates."""
        X = np.atleast_2d(X)
        back = self.inverse().on_y(self.on_y(embed_jP(self.source, X)))
        return float(np.max(np.abs(project_to_base(self.source, back) - X)))


def compose(g2, g1):
    """``g2 o g1``; the source of ``g2`` must be the target of ``g1``, relabelled or not."""
    if _same_data(g1.target, g2.source):
        p = np.arange(g1.source.m)
    elif _same_data(g1.target_original, g2.source):
        p = np.array(g1.sigma)
    else:
        raise ValueError("base maps are not composable")
    q = np.argsort(p)
    # facet i of P goes to facet p[i] of g2's source, then to facet sigma2[p[i]]

    def fwd_y(Y):
        return g2.on_y(g1.on_y(Y)[:, q])[:, p]

    def inv_y(Y):
        return g1.inverse().on_y(g2.inverse().on_y(Y[:, q])[:, p])

    both = g1.invertible and g2.invertible
    kinds = {g1.kind, g2.kind}
    kind = next(k for k in ("user-supplied", "structure-composite", "affine") if k in kinds)
    return BaseMap(
        g1.source, g2.target_original, lambda X: g2(g1(X)),
        (lambda X: g1.inverse()(g2.inverse()(X))) if both else None, kind,
        sigma=tuple(g2.sigma[int(k)] for k in p), forward_y=fwd_y, inverse_y=inv_y if both else None,
        info={"composition": [g1.describe(), g2.describe()]})


def identity_map(P):
    return BaseMap(P, P, lambda X: X.copy(), lambda X: X.copy(), "affine",
                   forward_y=lambda Y: Y.copy(), inverse_y=lambda Y: Y.copy(),
                   info={"M": np.eye(P.n).tolist(), "d": [0.0] * P.n, "lambda": [1.0] * P.m})


def _fit_affine(P, Q, sigma):
    Qs = Q.permute_facets(sigma)
    index = {frozenset(om): k for k, om in enumerate(Qs.incidence)}
    W = np.array([Qs.vertices[index[frozenset(om)]] for om in P.incidence])
    V1 = np.hstack([P.vertices, np.ones((len(P.vertices), 1))])
    sol, *_ = np.linalg.lstsq(V1, W, rcond=None)
    M, d = sol[:-1].T, sol[-1]
    scale = 1.0 + float(np.abs(W).max())
    if float(np.abs(V1 @ sol - W).max()) > 1e-8 * scale:
        return None
    # slack of Q at g(x) against slack of P at x, facet by facet, over the vertices
    yP = P.vertex_y
    yQ = embed_jP(Qs, P.vertices @ M.T + d)
    lam = np.array([np.dot(yP[:, i], yQ[:, i]) / np.dot(yP[:, i], yP[:, i]) for i in range(P.m)])
    if np.any(lam <= 0) or float(np.abs(yQ - lam * yP).max()) > 1e-8 * (1.0 + float(np.abs(yQ).max())):
        return None
    return M, d, lam


def base_map_affine(P, Q, sigma=None):
    """Affine ``g(x) = M x + d`` carrying ``P`` onto ``Q``.

    The map is fitted by least squares on corresponding vertices. When
    ``sigma`` is omitted every combinatorial isomorphism is tried. In slack
    coordinates a facet-compatible affine map is diagonal, ``y'_i = lambda_i y_i``.
    """
    candidates = [tuple(sigma)] if sigma is not None else iter_isomorphisms(P, Q)
    for s in candidates:
        fit = _fit_affine(P, Q, s)
        if fit is not None:
            break
    else:
        raise NotAffinelyEquivalent(f"{P.name or 'P'} is not an affine image of {Q.name or 'Q'}")
    M, d, lam = fit
    Minv = np.linalg.inv(M)
    return BaseMap(P, Q, lambda X: X @ M.T + d, lambda X: (X - d) @ Minv.T, "affine", sigma=s,
                   forward_y=lambda Y: Y * lam, inverse_y=lambda Y: Y / lam,
                   info={"M": M.tolist(), "d": d.tolist(), "lambda": lam.tolist()})


def base_map_structure_composite(P, CS, xi):
    """The corner diffeomorphism ``F`` of ``P`` (linear to quadratic corners) as a base map ``P -> P``."""
    F = StructureDiffeo(CS, xi)
    return BaseMap(P, P, F, F.inverse, "structure-composite",
                   forward_y=F.on_y, inverse_y=F.inverse_on_y,
                   info={"delta": CS.delta})


def structure_conjugate(P, Q, delta_P=None, delta_Q=None, sigma=None):
    """``F_Q o A o F_P^-1`` for an affine ``A: P -> Q``.

    Unlike the bare corner map this is a diffeomorphism between the quadratic
    corner structures, so its lift is smooth; it is not affine as soon as
    the collar widths differ. Defaults: the safe width of ``P`` and half the
    safe width of ``Q``.
    """
    A = base_map_affine(P, Q, sigma)
    dP = safe_width(P) if delta_P is None else delta_P
    dQ = 0.5 * safe_width(A.target) if delta_Q is None else delta_Q
    FP = base_map_structure_composite(P, build_collars(P, dP), make_xi(dP))
    FQ = base_map_structure_composite(A.target, build_collars(A.target, dQ), make_xi(dQ))
    g = compose(FQ, compose(A, FP.inverse()))
    g.target_original = Q
    g.sigma = A.sigma
    g.info = {"delta_P": dP, "delta_Q": dQ, "affine": A.describe()}
    return g


class ExternalMap:
    """Point map evaluated by an external command speaking line-delimited JSON.

    Each input line is ``{"x": [...]}`` and each output line ``{"gx": [...]}``,
    one per input, in order. The command runs once per batch.
    """

    def __init__(self, command):
        self.command = command
        self.argv = shlex.split(command)

    def __call__(self, X):
        X = np.atleast_2d(X)
        payload = "".join(json.dumps({"x": row.tolist()}) + "\n" for row in X)
        try:
            proc = subprocess.run(self.argv, input=payload, capture_output=True, text=True, check=False)
        except OSError as exc:
            raise ExternalMapError(f"cannot run {self.command!r}: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalMapError(f"{self.command!r} exited with {proc.returncode}: {proc.stderr.strip()}")
        try:
            rows = [json.loads(line)["gx"] for line in proc.stdout.splitlines() if line.strip()]
            out = np.array(rows, dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise ExternalMapError(f"bad reply from {self.command!r}: {exc}") from exc
        if out.shape != X.shape:
            raise ExternalMapError(f"expected {X.shape[0]} points of dimension {X.shape[1]}, got {out.shape}")
        return out


def base_map_external(P, Q, command, inverse_command, sigma=None):
    return BaseMap(P, Q, ExternalMap(command), ExternalMap(inverse_command), "user-supplied",
                   sigma=sigma, info={"command": command, "inverse_command": inverse_command})


# lifting

class LiftedMap:
    """Sign lift ``f`` of a base map to the real moment-angle manifolds."""

    def __init__(self, g, tol=TAU_LIFT):
        self.g = g
        self.tol = tol
        self.QS_P = complement_matrix(g.source)
        self.QS_Q = complement_matrix(g.target)

    def evaluate(self, U):
        """Return ``(f(U), membership residuals)`` without raising."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        Yq = self.g.on_y(U * U)
        root = np.where(U == 0, 0.0, np.sqrt(np.maximum(Yq, 0.0)))
        out = np.copysign(root, U)
        return out, membership_residual(self.QS_Q, out)

    def __call__(self, U):
        out, res = self.evaluate(U)
        worst = float(res.max(initial=0.0))
        if not worst < self.tol:
            raise TargetMembershipViolation(
                f"lifted points miss the target quadrics by {worst:.3g}", residual=worst)
        return out[0] if np.ndim(U) == 1 else out

    def inverse(self):
        return LiftedMap(self.g.inverse(), self.tol)


def lift(g, tol=TAU_LIFT):
    return LiftedMap(g, tol)


# wall derivatives

def _wall_probes(P, count, rng):
    """``y`` vectors on every facet and codimension-2 face, plus interior points."""
    parts = []
    for i in range(P.m):
        parts.append(face_points(P, (i,), count, rng))
        for j in range(i + 1, P.m):
            if P.n >= 2 and P.is_face((i, j)):
                parts.append(face_points(P, (i, j), max(1, count // 2), rng))
    parts.append(P.vertex_y)
    return np.concatenate(parts)


def _chart_for(P, y):
    S = [j for j in range(P.m) if y[j] == 0.0]
    if S:
        return P.face_vertices(S)[0]
    return int(np.argmin([y[list(c.omega)].sum() for c in P.charts]))


def verify_wall_derivatives(fhat, probes=6, h=FD_STEP, seed=0, threads=1, tol=TAU_FD,
                            interior=8, raise_on_failure=False):
    """Wall derivative conditions for a lifted map, in quadratic vertex charts.

    At a probe on the wall ``R_l = 0`` of the chart ``(v, +1)`` the one-sided
    derivatives of ``G = f[omega_v]`` must satisfy ``|dG_k/d+R_l| < tau`` for
    ``k != l`` and ``dG_l/d+R_l > tau``, and the column ``dG/dR_l`` must be
    continuous across the wall (one-sided values from both sides and
    extrapolated limits from ``R_l = +-eta`` agree). ``tau`` is ``tol``
    scaled by ``1 + max |J|``. Also records ``|det J|`` at every probe.
    """
    g = fhat.g
    P = g.source
    rng = np.random.default_rng(seed)
    Y = _wall_probes(P, probes, rng)
    Y = np.concatenate([Y, interior_points(P, interior, rng)])
    tags = np.array([_chart_for(P, y) for y in Y])
    C = np.sqrt(np.take_along_axis(Y, np.array([P.charts[v].omega for v in tags]), axis=1))
    n = P.n
    eta = 10 * h

    pts, owner = [], []

    def add(p, k):
        pts.append(p)
        owner.append(k)
        return len(pts) - 1

    plan = []
    for k, c in enumerate(C):
        wall = [r for r in range(n) if c[r] == 0.0]
        cols = []
        for r in range(n):
            e = np.zeros(n)
            e[r] = h
            if r in wall:
                cols.append(("f", add(c, k), add(c + e, k), add(c + 2 * e, k)))
            else:
                cols.append(("c", add(c + e, k), add(c - e, k)))
        extra = {}
        for l in wall:
            e = np.zeros(n)
            e[l] = h
            el = np.zeros(n)
            el[l] = eta
            back = (add(c - e, k), add(c - 2 * e, k))
            lims = [(add(c + s * mu * el + e, k), add(c + s * mu * el - e, k))
                    for s in (1, -1) for mu in (1, 2)]
            extra[l] = (back, lims)
        plan.append((wall, cols, extra))

    pts = np.array(pts)
    ptags = tags[np.array(owner)]
    chunks = np.array_split(np.arange(len(pts)), max(1, threads))

    def G(idx):
        out = np.empty((len(idx), n))
        for v in np.unique(ptags[idx]):
            sel = idx[ptags[idx] == v]
            chart = P.charts[v]
            U = _reconstruct(chart, pts[sel], np.ones(len(chart.complement)), "rzp")
            out[np.searchsorted(idx, sel)] = fhat(U)[:, list(chart.omega)]
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = np.concatenate(list(pool.map(G, chunks)))
    else:
        vals = G(np.arange(len(pts)))

    worst = {"off_diagonal": 0.0, "continuity": 0.0}
    min_diag, min_det = np.inf, np.inf
    failure = None
    for k, (wall, cols, extra) in enumerate(plan):
        J = np.empty((n, n))
        for r, col in enumerate(cols):
            if col[0] == "f":
                J[:, r] = (-3 * vals[col[1]] + 4 * vals[col[2]] - vals[col[3]]) / (2 * h)
            else:
                J[:, r] = (vals[col[1]] - vals[col[2]]) / (2 * h)
        scale = 1.0 + float(np.abs(J).max())
        min_det = min(min_det, abs(float(np.linalg.det(J))))
        for l in wall:
            (b1, b2), lims = extra[l]
            d_plus = J[:, l]
            d_minus = -(-3 * vals[cols[l][1]] + 4 * vals[b1] - vals[b2]) / (2 * h)
            cen = [(vals[a] - vals[b]) / (2 * h) for a, b in lims]
            lim_p, lim_m = 2 * cen[0] - cen[1], 2 * cen[2] - cen[3]
            off = np.delete(np.abs(d_plus), l)
            off_res = float(off.max(initial=0.0)) / scale
            cont = float(max(np.abs(d_plus - d_minus).max(), np.abs(d_plus - lim_p).max(),
                             np.abs(d_plus - lim_m).max())) / scale
            diag = float(d_plus[l]) / scale
            if off_res > worst["off_diagonal"]:
                worst["off_diagonal"] = off_res
                if off_res >= tol and failure is None:
                    kk = int(np.argmax(np.abs(d_plus) - (np.arange(n) == l)))
                    failure = ("off-diagonal derivative", k, (kk, l), off_res)
            worst["continuity"] = max(worst["continuity"], cont)
            if cont >= tol and failure is None:
                failure = ("derivative jumps across the wall", k, (l, l), cont)
            min_diag = min(min_diag, diag)
            if diag <= tol and failure is None:
                failure = ("diagonal derivative not positive", k, (l, l), diag)
    report = {
        "probes": len(C),
        "wall_probes": sum(1 for w, _, _ in plan if w),
        "max_off_diagonal": worst["off_diagonal"],
        "max_continuity": worst["continuity"],
        "min_diagonal": float(min_diag) if np.isfinite(min_diag) else None,
        "min_abs_det": min_det,
        "ok": failure is None,
    }
    if failure is not None:
        what, k, pair, res = failure
        report["failure"] = {"reason": what, "probe": Y[k].tolist(), "chart": int(tags[k]),
                             "pair": list(pair), "residual": res}
        if raise_on_failure:
            raise C1Violation(f"{what} at probe {Y[k].tolist()}", Y[k].tolist(), pair, res)
    return report


# certificate

def _check(name, residual, ok, **extra):
    return {"name": name, "status": "pass" if ok else "fail", "residual": residual, **extra}


def _guarded(name, fn):
    try:
        return fn()
    except MomentAngleError as exc:
        res = getattr(exc, "residual", None)
        return _check(name, res, False, error=type(exc).__name__, message=str(exc))


def verify_equivariant_diffeo(fhat, probes=100, seed=0, sign_vectors=64, threads=1,
                              wall_probes=6, det_margin=1e-8):
    """Certificate for a lifted map: every check with its residual and status.

    Failures, including exceptions raised by the map, are recorded as failing
    checks rather than raised.
    """
    g = fhat.g
    P = g.source
    U = sample_points(P, fhat.QS_P, probes, seed)
    rng = np.random.default_rng(seed + 1)
    checks = []

    def membership():
        _, res = fhat.evaluate(U)
        worst = float(res.max())
        if not worst < fhat.tol:
            raise TargetMembershipViolation(
                f"lifted points miss the target quadrics by {worst:.3g}", residual=worst)
        return _check("membership", worst, True)

    def equivariance():
        S = rng.choice([-1.0, 1.0], size=(sign_vectors, P.m))
        SU = (S[:, None, :] * U[None]).reshape(-1, P.m)
        left, _ = fhat.evaluate(SU)
        right = (S[:, None, :] * fhat.evaluate(U)[0][None]).reshape(-1, P.m)
        exact = left.tobytes() == right.tobytes()
        return _check("equivariance", float(np.abs(left - right).max()), exact,
                      sign_vectors=sign_vectors, bit_exact=exact)

    def stabilizers():
        out = fhat(U)
        bad = int(np.sum((U == 0) != (out == 0)))
        return _check("stabilizers", float(bad), bad == 0)

    def orbit():
        out = fhat(U)
        lhs = project_to_base(g.target, out * out)
        rhs = g(project_to_base(P, U * U))
        res = float(np.abs(lhs - rhs).max())
        return _check("orbit_compatibility", res, res < 1e-9)

    def round_trip():
        if not g.invertible:
            return _check("round_trip", None, False, message="no inverse map supplied")
        back = fhat.inverse()(fhat(U))
        res = float(np.abs(back - U).max())
        return _check("round_trip", res, res < 1e-8)

    def facets():
        res = g.facet_compatibility_residual(seed=seed)
        return _check("facet_compatibility", res, res < 1e-8)

    def base_bijectivity():
        if not g.invertible:
            return _check("base_bijectivity", None, False, message="no inverse map supplied")
        res = g.bijectivity_residual(project_to_base(P, U * U))
        return _check("base_bijectivity", res, res < 1e-8)

    checks.append(_guarded("membership", membership))
    checks.append(_guarded("equivariance", equivariance))
    checks.append(_guarded("stabilizers", stabilizers))
    checks.append(_guarded("orbit_compatibility", orbit))
    checks.append(_guarded("round_trip", round_trip))
    checks.append(_guarded("facet_compatibility", facets))
    checks.append(_guarded("base_bijectivity", base_bijectivity))

    def walls():
        rep = verify_wall_derivatives(fhat, wall_probes, seed=seed, threads=threads)
        worst = max(rep["max_off_diagonal"], rep["max_continuity"])
        det_ok = rep["min_abs_det"] > det_margin
        return [_check("wall_derivatives", worst, rep["ok"],
                       min_diagonal=rep["min_diagonal"], failure=rep.get("failure")),
                _check("jacobian_nondegenerate", rep["min_abs_det"], det_ok, margin=det_margin)]

    try:
        checks.extend(walls())
    except MomentAngleError as exc:
        checks.append(_check("wall_derivatives", getattr(exc, "residual", None), False,
                             error=type(exc).__name__, message=str(exc)))
    return {
        "map": g.describe(),
        "probes": int(len(U)),
        "checks": checks,
        "status": "pass" if all(c["status"] == "pass" for c in checks) else "fail",
    }
