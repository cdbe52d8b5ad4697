import numpy as np
import pytest

from momentangle.atlas import (chart_domain_contains, chart_id, charts_containing, check_atlas,
                               complex_transition_apply, from_chart, to_chart, transition,
                               transition_apply, transition_jacobian, verify_transition_smoothness)
from momentangle.errors import NotInChart, NotInChartDomain, NotInOverlap, SmoothnessViolation
from momentangle.gale import complement_matrix
from momentangle.manifold import SignVector, sample_points, sign_action


def _vertex(P, omega):
    return P.incidence.index(tuple(omega))


@pytest.fixture
def simplex2(fixtures):
    P = fixtures["simplex2"]
    return P, complement_matrix(P)


@pytest.fixture
def circle(fixtures):
    P = fixtures["segment"]
    return P, complement_matrix(P)


def test_domain_examples(simplex2, circle):
    P, _ = simplex2
    v = _vertex(P, (0, 1))
    assert chart_domain_contains(P, v, [0, 0])
    assert not chart_domain_contains(P, v, [1, 1])
    S, _ = circle
    assert not chart_domain_contains(S, _vertex(S, (0,)), [1.0])


def test_to_and_from_chart_examples(simplex2, circle):
    P, QS = simplex2
    v = _vertex(P, (0, 1))
    cid = chart_id(P, v, {2: 1})
    np.testing.assert_allclose(to_chart(P, QS, cid, [0.6, 0, 0.8]), [0.6, 0])
    with pytest.raises(NotInChart):
        to_chart(P, QS, cid, [0.6, 0, -0.8])
    np.testing.assert_allclose(from_chart(P, QS, cid, [0.6, 0]).u, [0.6, 0, 0.8])
    with pytest.raises(NotInChartDomain):
        from_chart(P, QS, cid, [1, 1])

    S, QS1 = circle
    w = _vertex(S, (0,))
    np.testing.assert_allclose(to_chart(S, QS1, chart_id(S, w, {1: 1}), [0, 1]), [0])
    np.testing.assert_allclose(from_chart(S, QS1, chart_id(S, w, {1: -1}), [0]).u, [0, -1])


def test_chart_round_trip(any_polytope, rng):
    P = any_polytope
    QS = complement_matrix(P)
    for v, ch in enumerate(P.charts):
        signs = tuple(int(s) for s in rng.choice([-1, 1], size=len(ch.complement)))
        cid = chart_id(P, v, signs)
        found = 0
        while found < 100:
            c = rng.uniform(-1, 1, size=P.n) * rng.uniform(0, 1)
            if not chart_domain_contains(P, v, c):
                continue
            u = from_chart(P, QS, cid, c)
            np.testing.assert_array_equal(to_chart(P, QS, cid, u), c)
            found += 1


def test_chart_ids_are_validated(simplex2):
    P, _ = simplex2
    with pytest.raises(ValueError):
        chart_id(P, 0, {0: 1})
    with pytest.raises(ValueError):
        chart_id(P, 0, (2,))
    with pytest.raises(ValueError):
        chart_id(P, 0, structure="nonsense")


def test_circle_transition(circle):
    S, QS = circle
    v, w = _vertex(S, (0,)), _vertex(S, (1,))
    T = transition(S, chart_id(S, v, {1: 1}), chart_id(S, w, {0: 1}))
    np.testing.assert_allclose(transition_apply(T, [0.6]), [0.8])
    np.testing.assert_allclose(transition_jacobian(T, [0.6]), [[-0.75]])
    rep = verify_transition_smoothness(S, QS, T, [[0.6]], third=None)
    assert rep["max_jacobian_residual"] < 1e-6


def test_base_linear_transition(simplex2):
    P, QS = simplex2
    src = chart_id(P, _vertex(P, (0, 1)), structure="base-linear")
    dst = chart_id(P, _vertex(P, (0, 2)), structure="base-linear")
    T = transition(P, src, dst)
    np.testing.assert_allclose(transition_apply(T, [0.2, 0.3]), [0.2, 0.5])
    rep = verify_transition_smoothness(P, QS, T, [[0.2, 0.3], [0.1, 0.4]])
    assert rep["max_jacobian_residual"] < 1e-10


def test_identity_transition(simplex2):
    P, _ = simplex2
    cid = chart_id(P, 0, (-1,))
    np.testing.assert_array_equal(transition_apply(transition(P, cid, cid), [0.3, -0.2]), [0.3, -0.2])


def test_overlap_condition_is_symmetric(fixtures):
    P = fixtures["square"]
    for v in range(len(P.vertices)):
        for w in range(len(P.vertices)):
            for eps in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
                for eta in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
                    a, b = chart_id(P, v, eps), chart_id(P, w, eta)
                    try:
                        transition(P, a, b)
                        forward = True
                    except NotInOverlap:
                        forward = False
                    try:
                        transition(P, b, a)
                        backward = True
                    except NotInOverlap:
                        backward = False
                    assert forward == backward


def test_transition_rejects_points_outside_overlap(simplex2):
    P, _ = simplex2
    v, w = _vertex(P, (0, 1)), _vertex(P, (0, 2))
    T = transition(P, chart_id(P, v, (1,)), chart_id(P, w, (1,)))
    with pytest.raises(NotInOverlap):
        transition_apply(T, [0.2, -0.3])
    with pytest.raises(NotInOverlap):
        transition_apply(T, [0.2, 0.0])


def test_cocycle_on_simplex(simplex2):
    P, QS = simplex2
    ids = [chart_id(P, v, (1,)) for v in range(3)]
    T = transition(P, ids[0], ids[1])
    om0 = P.charts[0].omega
    probes = []
    for u in sample_points(P, QS, 200, seed=2):
        u = np.abs(u)
        if np.all(u > 0.05):
            probes.append(u[list(om0)])
    rep = verify_transition_smoothness(P, QS, T, probes, third=ids[2])
    assert rep["ok"] and rep["max_cocycle"] < 1e-9


def test_smoothness_violation_is_raised(simplex2, monkeypatch):
    import momentangle.atlas as atlas
    P, QS = simplex2
    T = transition(P, chart_id(P, 0, (1,)), chart_id(P, 1, (1,)))
    monkeypatch.setattr(atlas, "_jacobian", lambda T, c, s: np.zeros((len(c), 2, 2)))
    c = np.abs(sample_points(P, QS, 50, seed=0))
    c = c[np.all(c > 0.05, axis=1)][:, list(P.charts[0].omega)]
    with pytest.raises(SmoothnessViolation):
        verify_transition_smoothness(P, QS, T, c)


def test_charts_containing_covers_samples(any_polytope):
    P = any_polytope
    QS = complement_matrix(P)
    for u in sample_points(P, QS, 100, seed=4):
        found = charts_containing(P, u)
        assert found
        zeros = set(np.flatnonzero(u == 0).tolist())
        if zeros:
            expected = {v for v, om in enumerate(P.incidence) if zeros <= set(om)}
            assert {c.vertex for c in found} == expected


def test_chart_equivariance_and_orbit_compatibility(any_polytope, rng):
    P = any_polytope
    QS = complement_matrix(P)
    for u in sample_points(P, QS, 50, seed=8):
        s = SignVector.random(P.m, rng)
        for cid in charts_containing(P, u):
            om, comp = P.charts[cid.vertex].omega, P.charts[cid.vertex].complement
            c = to_chart(P, QS, cid, u)
            moved = chart_id(P, cid.vertex, tuple(e * s.signs[j] for e, j in zip(cid.signs, comp)))
            np.testing.assert_array_equal(to_chart(P, QS, moved, sign_action(s, u)), s.array()[list(om)] * c)
            # absolute values of rzp coordinates are the base-quadratic chart of the projection
            np.testing.assert_allclose(np.abs(c), np.sqrt((u * u)[list(om)]))


def test_complex_transition_matches_real_one(circle):
    S, _ = circle
    v, w = _vertex(S, (0,)), _vertex(S, (1,))
    T = transition(S, chart_id(S, v, {1: 1}), chart_id(S, w, {0: 1}))
    z, ph = complex_transition_apply(T, [0.6 * np.exp(0.4j)], [0.0])
    np.testing.assert_allclose(z, [0.8])
    np.testing.assert_allclose(ph, [0.4])


def test_check_atlas_passes(any_polytope):
    P = any_polytope
    rep = check_atlas(P, complement_matrix(P), probes=20, seed=1)
    for s in ("rzp", "base-linear", "base-quadratic"):
        assert rep[s]["ok"], (s, rep[s]["max_jacobian_residual"], rep[s]["max_cocycle"])
    assert rep["rzp"]["max_probe_membership"] < 1e-9


def test_check_atlas_is_thread_independent(fixtures):
    P = fixtures["pentagon"]
    QS = complement_matrix(P)
    a = check_atlas(P, QS, probes=10, seed=3, threads=1)
    b = check_atlas(P, QS, probes=10, seed=3, threads=4)
    assert a == b
