"""Vertex charts on the real moment-angle manifold and on the polytope.

A chart is attached to a vertex ``v`` of ``P``. On the manifold it also carries
a sign ``eps_j`` for every facet ``j`` not containing ``v``; its coordinates
are ``u[omega_v]``. On ``P`` itself there are two corner structures: linear
coordinates ``y[omega_v]`` and quadratic coordinates ``sqrt(y[omega_v])``.
Charts are generated on demand; nothing global is materialised.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NotInChart, NotInChartDomain, NotInOverlap, SmoothnessViolation
from .manifold import ManifoldPoint, face_points, membership_residual

STRUCTURES = ("rzp", "base-linear", "base-quadratic")
FD_STEP = 1e-5


def _relative_jac_residual(J_fd, J_an):
    """Entrywise gap between two Jacobians relative to ``1 + |J|``; compared against 1e-4."""
    return np.max(np.abs(J_fd - J_an), axis=(-2, -1)) / (1.0 + np.max(np.abs(J_an), axis=(-2, -1)))


@dataclass(frozen=True)
class ChartId:
    """``signs[k]`` is the sign of facet ``complement[k]`` of the vertex chart (rzp only)."""

    vertex: int
    signs: tuple = ()
    structure: str = "rzp"

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.structure != "rzp" and self.signs:
            raise ValueError("base charts carry no signs")


def chart_id(P, v, signs=None, structure="rzp"):
    """Build a ChartId; ``signs`` may be a dict ``{facet: +-1}`` or a tuple over the complement."""
    if structure != "rzp":
        return ChartId(v, (), structure)
    comp = P.charts[v].complement
    if signs is None:
        signs = (1,) * len(comp)
    elif isinstance(signs, dict):
        if set(signs) != set(comp):
            raise ValueError(f"signs must be given exactly on facets {comp}")
        signs = tuple(int(signs[j]) for j in comp)
    signs = tuple(int(s) for s in signs)
    if len(signs) != len(comp) or any(s not in (1, -1) for s in signs):
        raise ValueError(f"need {len(comp)} signs of +-1, got {signs}")
    return ChartId(v, signs, "rzp")


def _quad_form(chart, coords):
    return (coords * coords) @ chart.a_tilde.T + chart.b_tilde


def _reconstruct(chart, coords, comp_signs, structure):
    """All ``m`` coordinates from chart coordinates (batched)."""
    coords = np.atleast_2d(coords)
    m = len(chart.omega) + len(chart.complement)
    full = np.empty((coords.shape[0], m))
    full[:, list(chart.omega)] = coords
    if chart.complement:
        comp = list(chart.complement)
        if structure == "base-linear":
            full[:, comp] = coords @ chart.a_tilde.T + chart.b_tilde
        else:
            root = np.sqrt(np.maximum(_quad_form(chart, coords), 0.0))
            full[:, comp] = root if structure == "base-quadratic" else comp_signs * root
    return full


def _domain_ok(chart, coords, structure):
    c = np.atleast_2d(coords)
    if structure == "base-linear":
        vals = c @ chart.a_tilde.T + chart.b_tilde
    else:
        vals = _quad_form(chart, c)
    ok = np.all(vals > 0, axis=-1)
    if structure != "rzp":
        ok &= np.all(c >= 0, axis=-1)
    return ok


def chart_domain_contains(P, v, coords, structure="rzp"):
    """Whether chart coordinates lie in the chart's image (strict inequalities off ``omega_v``)."""
    ok = _domain_ok(P.charts[v], np.asarray(coords, dtype=float), structure)
    return bool(ok[0]) if np.ndim(coords) == 1 else ok


def to_chart(P, QS, cid, u):
    """Coordinates of a manifold point in the rzp chart ``cid``."""
    u = u.u if isinstance(u, ManifoldPoint) else np.asarray(u, dtype=float)
    chart = P.charts[cid.vertex]
    for j, s in zip(chart.complement, cid.signs):
        if u[j] == 0 or np.sign(u[j]) != s:
            raise NotInChart(f"u[{j}] = {u[j]!r} does not have sign {s:+d}")
    return u[list(chart.omega)].copy()


def base_to_chart(P, cid, x):
    """Coordinates of a point ``x`` of ``P`` in a base (linear or quadratic) chart."""
    chart = P.charts[cid.vertex]
    y = np.asarray(x, dtype=float) @ P.A.T + P.b
    if np.any(y[list(chart.complement)] <= 0):
        raise NotInChart("point lies on a facet not containing the chart vertex")
    yv = np.maximum(y[list(chart.omega)], 0.0)
    return yv if cid.structure == "base-linear" else np.sqrt(yv)


def from_chart(P, QS, cid, coords):
    """Inverse of :func:`to_chart` (rzp) or of :func:`base_to_chart` (base charts, returns ``x``)."""
    chart = P.charts[cid.vertex]
    c = np.asarray(coords, dtype=float)
    if not chart_domain_contains(P, cid.vertex, c, cid.structure):
        raise NotInChartDomain(f"coordinates {c.tolist()} are outside the chart domain")
    full = _reconstruct(chart, c, np.array(cid.signs, dtype=float), cid.structure)[0]
    if cid.structure == "rzp":
        return ManifoldPoint.checked(QS, full)
    y = full if cid.structure == "base-linear" else full * full
    return chart.point(y[list(chart.omega)])


def charts_containing(P, u):
    """Every rzp chart whose domain contains the manifold point ``u``."""
    u = u.u if isinstance(u, ManifoldPoint) else np.asarray(u, dtype=float)
    out = []
    for chart in P.charts:
        comp = list(chart.complement)
        if np.all(u[comp] != 0):
            out.append(ChartId(chart.vertex, tuple(int(s) for s in np.sign(u[comp])), "rzp"))
    return out


# transitions

@dataclass(frozen=True, eq=False)
class TransitionMap:
    source: ChartId
    target: ChartId
    src: object
    dst: object

    @property
    def structure(self):
        return self.source.structure


def transition(P, source, target):
    """Transition map between two charts; raises :class:`NotInOverlap` if their domains are disjoint."""
    if source.structure != target.structure:
        raise ValueError("charts belong to different structures")
    src, dst = P.charts[source.vertex], P.charts[target.vertex]
    if source.structure == "rzp":
        eps = dict(zip(src.complement, source.signs))
        eta = dict(zip(dst.complement, target.signs))
        for j in set(eps) & set(eta):
            if eps[j] != eta[j]:
                raise NotInOverlap(f"charts disagree on the sign of facet {j}")
    return TransitionMap(source, target, src, dst)


def _full_signs(T, comp_signs_src, comp_signs_dst, N):
    """Per-probe sign vectors over all facets (entries on the shared face are irrelevant)."""
    m = len(T.src.omega) + len(T.src.complement)
    s = np.ones((N, m))
    if comp_signs_dst is not None:
        s[:, list(T.dst.complement)] = comp_signs_dst
    if comp_signs_src is not None:
        s[:, list(T.src.complement)] = comp_signs_src
    return s


def _apply(T, coords, signs):
    """Batched transition with a full per-probe sign array ``signs`` of shape ``(N, m)``."""
    full = _reconstruct(T.src, coords, signs[:, list(T.src.complement)], T.structure)
    return full[:, list(T.dst.omega)]


def _jacobian(T, coords, signs):
    """Analytic Jacobian of :func:`_apply`, shape ``(N, n, n)``."""
    coords = np.atleast_2d(coords)
    N, n = coords.shape
    J = np.zeros((N, n, n))
    pos_src = {j: k for k, j in enumerate(T.src.omega)}
    pos_comp = {j: k for k, j in enumerate(T.src.complement)}
    for s, j in enumerate(T.dst.omega):
        if j in pos_src:
            J[:, s, pos_src[j]] = 1.0
            continue
        k = pos_comp[j]
        a = T.src.a_tilde[k]
        if T.structure == "base-linear":
            J[:, s, :] = a
        else:
            root = np.sqrt(coords * coords @ a + T.src.b_tilde[k])
            row = a * coords / root[:, None]
            J[:, s, :] = row if T.structure == "base-quadratic" else signs[:, [j]] * row
    return J


def _check_overlap(T, coords, signs):
    c = np.atleast_2d(coords)
    if not np.all(_domain_ok(T.src, c, T.structure)):
        raise NotInOverlap("coordinates lie outside the source chart domain")
    pos_src = {j: k for k, j in enumerate(T.src.omega)}
    for j in T.dst.complement:
        if j in pos_src:
            vals = c[:, pos_src[j]]
            if T.structure == "rzp":
                if np.any(vals == 0) or np.any(np.sign(vals) != signs[:, j]):
                    raise NotInOverlap(f"coordinate of facet {j} has the wrong sign for the target chart")
            elif np.any(vals <= 0):
                raise NotInOverlap(f"point lies on facet {j}, outside the target chart")


def transition_apply(T, coords, check=True):
    """Apply a transition map to chart coordinates (one point or a batch)."""
    c = np.asarray(coords, dtype=float)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    eps = np.array(T.source.signs, dtype=float) if T.source.signs else None
    eta = np.array(T.target.signs, dtype=float) if T.target.signs else None
    signs = _full_signs(T, eps, eta, c.shape[0])
    if check:
        _check_overlap(T, c, signs)
    out = _apply(T, c, signs)
    return out[0] if single else out


def transition_jacobian(T, coords):
    c = np.atleast_2d(np.asarray(coords, dtype=float))
    eps = np.array(T.source.signs, dtype=float) if T.source.signs else None
    eta = np.array(T.target.signs, dtype=float) if T.target.signs else None
    J = _jacobian(T, c, _full_signs(T, eps, eta, c.shape[0]))
    return J[0] if np.ndim(coords) == 1 else J


def fd_jacobian(f, coords, h=FD_STEP):
    """Central-difference Jacobian of a batched map ``f: (N, n) -> (N, k)``."""
    c = np.atleast_2d(coords)
    N, n = c.shape
    cols = []
    for r in range(n):
        e = np.zeros(n)
        e[r] = h
        cols.append((f(c + e) - f(c - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def verify_transition_smoothness(P, QS, T, probes, h=FD_STEP, third=None, raise_on_failure=True):
    """Finite-difference versus analytic Jacobian, inverse round trip and (with ``third``) the cocycle.

    ``probes`` are source chart coordinates in the open overlap, at distance
    more than ``10 h`` from its boundary.
    """
    c = np.atleast_2d(np.asarray(probes, dtype=float))
    eps = np.array(T.source.signs, dtype=float) if T.source.signs else None
    eta = np.array(T.target.signs, dtype=float) if T.target.signs else None
    signs = _full_signs(T, eps, eta, c.shape[0])
    _check_overlap(T, c, signs)
    out = _apply(T, c, signs)
    J_an = _jacobian(T, c, signs)
    J_fd = fd_jacobian(lambda z: _apply(T, z, signs), c, h)
    jac = _relative_jac_residual(J_fd, J_an)
    back = transition(P, T.target, T.source)
    rt = np.max(np.abs(_apply(back, out, signs) - c), axis=1)
    report = {
        "source": [T.source.vertex, list(T.source.signs)],
        "target": [T.target.vertex, list(T.target.signs)],
        "structure": T.structure,
        "probes": int(c.shape[0]),
        "max_jacobian_residual": float(jac.max()),
        "max_roundtrip": float(rt.max()),
    }
    worst = int(np.argmax(jac))
    ok = bool(jac.max() <= 1e-4 and rt.max() <= 1e-9)
    if third is not None:
        T12 = transition(P, T.target, third)
        T02 = transition(P, T.source, third)
        cyc = np.max(np.abs(_apply(T12, out, signs) - _apply(T02, c, signs)), axis=1)
        report["max_cocycle"] = float(cyc.max())
        ok = ok and cyc.max() <= 1e-9
    report["ok"] = ok
    if not ok and raise_on_failure:
        raise SmoothnessViolation("transition check failed", worst_probe=c[worst].tolist(),
                                  residual=report["max_jacobian_residual"])
    return report


def complex_transition_apply(T, z, phases):
    """Transition between complex vertex charts on (modulus, phase) data.

    ``z`` holds the complex coordinates indexed by ``omega_v`` and ``phases``
    the angles of the facets off ``omega_v`` (in ``T.src.complement`` order).
    Returns the target pair. New angles use the principal branch of ``arg``.
    """
    z = np.asarray(z, dtype=complex)
    phases = np.asarray(phases, dtype=float)
    pos = {j: k for k, j in enumerate(T.src.omega)}
    pcomp = {j: k for k, j in enumerate(T.src.complement)}
    mod2 = (np.abs(z) ** 2) @ T.src.a_tilde.T + T.src.b_tilde
    z_new = np.array([z[pos[j]] if j in pos else
                      np.sqrt(mod2[pcomp[j]]) * np.exp(1j * phases[pcomp[j]]) for j in T.dst.omega])
    ph_new = np.array([np.angle(z[pos[j]]) if j in pos else phases[pcomp[j]]
                       for j in T.dst.complement])
    return z_new, ph_new


# whole-atlas suite

def _overlap_probes(P, shared, count, margin, rng, max_rounds=50):
    """``y`` vectors of probe points whose coordinates off ``shared`` exceed ``margin**2``.

    Probes sit on random faces cut out by subsets of ``shared`` (including the
    interior), so chart walls are exercised.
    """
    shared = list(shared)
    off = [j for j in range(P.m) if j not in shared]
    out, have = [], 0
    for _ in range(max_rounds):
        k = max(2 * (count - have), 16)
        masks = rng.random((k, len(shared))) < 0.3
        groups = {}
        for row in masks:
            key = tuple(s for s, on in zip(shared, row) if on)
            groups[key] = groups.get(key, 0) + 1
        for key in sorted(groups):
            y = face_points(P, key, groups[key], rng)
            y = y[np.all(y[:, off] > margin * margin, axis=1)] if off else y
            out.append(y)
            have += len(y)
        if have >= count:
            break
    if have < count:
        raise RuntimeError(f"could only place {have} of {count} overlap probes")
    y = np.concatenate(out)[:count]
    return y[rng.permutation(len(y))]


def _sign_patterns(P, count, rng):
    # all 2^m sign vectors when they fit, else random ones
    total = 2 ** P.m
    if total <= count:
        idx = np.arange(count) % total
    else:
        idx = rng.integers(total, size=count)
    bits = (idx[:, None] >> np.arange(P.m)) & 1
    return 1.0 - 2.0 * bits


def _coords(P, v, y, signs, structure):
    om = list(P.charts[v].omega)
    if structure == "base-linear":
        return y[:, om]
    r = np.sqrt(y[:, om])
    return r if structure == "base-quadratic" else signs[:, om] * r


def _pair_check(P, v, w, y, signs, structure, h):
    cv = _coords(P, v, y, signs, structure)
    cw = _coords(P, w, y, signs, structure)
    T = _bare(P, v, w, structure)
    out = _apply(T, cv, signs)
    back = _apply(_bare(P, w, v, structure), out, signs)
    J_an = _jacobian(T, cv, signs)
    J_fd = fd_jacobian(lambda z: _apply(T, z, signs), cv, h)
    jac = _relative_jac_residual(J_fd, J_an)
    return {
        "source": v, "target": w, "probes": int(len(y)),
        "max_jacobian_residual": float(jac.max()),
        "max_roundtrip": float(np.max(np.abs(back - cv))),
        "max_target_mismatch": float(np.max(np.abs(out - cw))),
    }


def _bare(P, v, w, structure):
    # signs are supplied per probe by the suite, so the chart ids carry none
    return TransitionMap(ChartId(v, (), structure), ChartId(w, (), structure),
                         P.charts[v], P.charts[w])


def check_atlas(P, QS, probes=100, h=FD_STEP, seed=0, structures=STRUCTURES, margin=0.05,
                threads=1):
    """Check every transition pair and every triple cocycle of the vertex atlases.

    For the rzp structure each probe carries its own sign vector, cycling
    through all of them when ``2**m <= probes``, so every pair of charts over
    a pair of vertices is covered. Returns a JSON-ready report.
    """
    if margin <= 10 * h:
        raise ValueError("probe margin must exceed 10 h")
    V = len(P.vertices)
    rng = np.random.default_rng(seed)
    pairs = [(v, w) for v in range(V) for w in range(V)]
    triples = list(combinations(range(V), 3))
    # draw all probes up front so the result does not depend on threading
    pair_data = []
    for v, w in pairs:
        shared = sorted(set(P.incidence[v]) & set(P.incidence[w]))
        pair_data.append((v, w, _overlap_probes(P, shared, probes, margin, rng),
                          _sign_patterns(P, probes, rng)))
    triple_data = []
    for t in triples:
        shared = sorted(set.intersection(*(set(P.incidence[v]) for v in t)))
        triple_data.append((t, _overlap_probes(P, shared, probes, margin, rng),
                            _sign_patterns(P, probes, rng)))

    report = {"vertices": V, "probes_per_overlap": probes, "step": h}
    for structure in structures:
        def run_pair(item, structure=structure):
            v, w, y, s = item
            if structure != "rzp":
                s = np.ones_like(s)
            return _pair_check(P, v, w, y, s, structure, h)

        def run_triple(item, structure=structure):
            (a, b, c), y, s = item
            if structure != "rzp":
                s = np.ones_like(s)
            ca = _coords(P, a, y, s, structure)
            via = _apply(_bare(P, b, c, structure), _apply(_bare(P, a, b, structure), ca, s), s)
            direct = _apply(_bare(P, a, c, structure), ca, s)
            return float(np.max(np.abs(via - direct)))

        with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
            pair_reports = list(ex.map(run_pair, pair_data))
            cyc = list(ex.map(run_triple, triple_data))
        worst_jac = max(r["max_jacobian_residual"] for r in pair_reports)
        worst_rt = max(r["max_roundtrip"] for r in pair_reports)
        worst_tm = max(r["max_target_mismatch"] for r in pair_reports)
        worst_cyc = max(cyc, default=0.0)
        report[structure] = {
            "pairs": pair_reports,
            "triples": len(triples),
            "max_jacobian_residual": worst_jac,
            "max_roundtrip": worst_rt,
            "max_target_mismatch": worst_tm,
            "max_cocycle": worst_cyc,
            "ok": bool(worst_jac <= 1e-4 and worst_rt <= 1e-9 and worst_tm <= 1e-9
                       and worst_cyc <= 1e-9),
        }
    if "rzp" in structures:
        # the probes themselves must be manifold points
        U = np.concatenate([np.sqrt(y) * s for _, _, y, s in pair_data])
        report["rzp"]["max_probe_membership"] = float(membership_residual(QS, U).max())
    return report
