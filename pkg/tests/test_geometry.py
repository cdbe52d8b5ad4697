from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentangle import exact
from momentangle.errors import (Empty, InputParseError, NotEquivalent, NotFullRank, NotInImage,
                                NotSimple, RedundantFacet, SearchBudgetExceeded, Unbounded)
from momentangle.fixtures import fixture_dict, load_fixture
from momentangle.geometry import (combinatorial_type, embed_jP, enumerate_vertices, from_hrep,
                                  iter_isomorphisms, match_combinatorics, polytope_from_dict,
                                  polytope_to_dict, project_to_base, validate_hrep, vertex_chart)
from momentangle.manifold import interior_points

SIMPLEX2 = ([[1, 0], [0, 1], [-1, -1]], [0, 0, 1])


def test_simplex2_vertices_and_incidence():
    P = validate_hrep(*SIMPLEX2)
    assert (P.m, P.n) == (3, 2)
    assert sorted(P.incidence) == [(0, 1), (0, 2), (1, 2)]
    got = sorted(map(tuple, P.vertices.round(12).tolist()))
    assert got == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]


def test_segment():
    P = validate_hrep([[1], [-1]], [0, 1])
    assert sorted(P.vertices.ravel().tolist()) == [0.0, 1.0]


def test_pentagon_has_five_vertices():
    P = validate_hrep([[1, 0], [0, 1], [-1, 0], [0, -1], [-1, -1]], [0, 0, 1, 1, 1.5])
    assert len(P.vertices) == 5
    assert all(len(om) == 2 for om in P.incidence)


def test_cube_enumeration():
    A = np.vstack([np.eye(3), -np.eye(3)])
    b = np.r_[np.zeros(3), np.ones(3)]
    verts = enumerate_vertices(A, b)
    assert len(verts) == 8
    assert all(len(om) == 3 for _, om in verts)


@pytest.mark.parametrize("A, b, error", [
    ([[1, 0], [2, 0], [-1, 0]], [0, 0, 1], NotFullRank),
    ([[1, 0], [0, 1], [-1, 1]], [0, 0, 1], Unbounded),
    ([[1], [-1]], [-1, 0], Empty),
    ([[1, 0], [0, 1], [-1, 0], [0, -1], [-1, 0]], [0, 0, 1, 1, 2], RedundantFacet),
])
def test_invalid_inputs(A, b, error):
    with pytest.raises(error):
        validate_hrep(A, b)


def test_square_pyramid_is_not_simple():
    with pytest.raises(NotSimple):
        load_fixture("square_pyramid")


def test_chart_examples():
    P = validate_hrep(*SIMPLEX2)
    v = P.incidence.index((0, 1))
    ch = vertex_chart(P, v)
    np.testing.assert_allclose(ch.a_tilde, [[-1, -1]])
    np.testing.assert_allclose(ch.b_tilde, [1])

    S = validate_hrep([[1], [-1]], [0, 1])
    ch = vertex_chart(S, S.incidence.index((0,)))
    np.testing.assert_allclose(ch.a_tilde, [[-1]])
    np.testing.assert_allclose(ch.b_tilde, [1])


def test_cube_chart_at_origin(fixtures):
    P = fixtures["cube"]
    v = int(np.argmin(np.abs(P.vertices).sum(axis=1)))
    ch = P.charts[v]
    # facet 2s+1 (x_s <= 1) is opposite facet 2s (x_s >= 0)
    for k, j in enumerate(ch.complement):
        expected = np.zeros(3)
        expected[ch.position(j - 1)] = -1
        np.testing.assert_allclose(ch.a_tilde[k], expected, atol=1e-15)
    np.testing.assert_allclose(ch.b_tilde, 1)


def test_chart_identity_and_positive_offsets(any_polytope, rng):
    P = any_polytope
    X = rng.normal(size=(100, P.n)) * 3
    Y = embed_jP(P, X)
    for ch in P.charts:
        yv = Y[:, list(ch.omega)]
        pred = yv @ ch.a_tilde.T + ch.b_tilde
        np.testing.assert_allclose(pred, Y[:, list(ch.complement)], atol=1e-10 * (1 + np.abs(Y).max()))
        assert np.all(ch.b_tilde > 0)


def test_embed_examples():
    P = validate_hrep(*SIMPLEX2)
    np.testing.assert_allclose(embed_jP(P, [0, 0]), [0, 0, 1])
    np.testing.assert_allclose(embed_jP(P, [1 / 3, 1 / 3]), [1 / 3, 1 / 3, 1 / 3])
    for x, om in zip(P.vertices, P.incidence):
        y = P.vertex_y[P.incidence.index(om)]
        assert all(y[i] == 0.0 for i in om)
        np.testing.assert_allclose(y, embed_jP(P, x), atol=1e-15)


def test_project_examples():
    P = validate_hrep(*SIMPLEX2)
    np.testing.assert_allclose(project_to_base(P, [0, 0, 1]), [0, 0], atol=1e-15)
    np.testing.assert_allclose(project_to_base(P, [1 / 3, 1 / 3, 1 / 3]), [1 / 3, 1 / 3])
    with pytest.raises(NotInImage):
        project_to_base(P, [0, 0, 2])


def test_image_is_nonnegative(any_polytope, rng):
    P = any_polytope
    Y = interior_points(P, 1000, rng)
    X = project_to_base(P, Y)
    assert np.all(embed_jP(P, X) >= -P.tau_act)


def test_combinatorial_types(fixtures):
    tri = from_hrep([[1, 0], [0, 1], [-2, -3]], [0, 0, 7])
    assert combinatorial_type(fixtures["simplex2"]) == combinatorial_type(tri)
    assert combinatorial_type(fixtures["square"]) != combinatorial_type(fixtures["simplex2"])
    assert combinatorial_type(fixtures["square"]) == combinatorial_type(fixtures["quadrilateral"])
    assert combinatorial_type(fixtures["cube"]) == combinatorial_type(fixtures["box3_scaled"])
    assert combinatorial_type(fixtures["prism"]) != combinatorial_type(fixtures["cube"])


def test_match_reversed_square(fixtures):
    P = fixtures["square"]
    d = fixture_dict("square")
    d["facets"] = d["facets"][::-1]
    Q = polytope_from_dict(d)
    assert match_combinatorics(P, Q) == (3, 2, 1, 0)
    assert match_combinatorics(P, P) == (0, 1, 2, 3)


def test_match_failures(fixtures):
    with pytest.raises(NotEquivalent):
        match_combinatorics(fixtures["pentagon"], fixtures["square"])
    with pytest.raises(NotEquivalent):
        match_combinatorics(fixtures["square"], fixtures["square"], hint=(0, 2, 1, 3))
    with pytest.raises(SearchBudgetExceeded):
        match_combinatorics(fixtures["cube"], fixtures["cube"], max_facets=4)


def test_match_inverse_composes_to_identity(fixtures):
    for a, b in [("square", "quadrilateral"), ("cube", "box3_scaled"), ("simplex2", "simplex2_scaled"),
                 ("square", "parallelogram")]:
        P, Q = fixtures[a], fixtures[b]
        sigma = match_combinatorics(P, Q)
        inv = tuple(int(k) for k in np.argsort(sigma))
        back = match_combinatorics(Q, P, hint=inv)
        assert tuple(back[s] for s in sigma) == tuple(range(P.m))


def test_automorphisms_are_valid(any_polytope):
    P = any_polytope
    target = {frozenset(om) for om in P.incidence}
    count = 0
    for sigma in iter_isomorphisms(P, P):
        assert {frozenset(sigma[i] for i in om) for om in P.incidence} == target
        count += 1
    assert count >= 1


def test_json_round_trip(any_polytope):
    P = any_polytope
    Q = polytope_from_dict(polytope_to_dict(P))
    np.testing.assert_array_equal(P.A, Q.A)
    np.testing.assert_array_equal(P.b, Q.b)
    assert P.exact_data == Q.exact_data


def test_json_accepts_numbers_and_rejects_garbage():
    P = polytope_from_dict({"dim": 1, "facets": [{"a": [1], "b": 0}, {"a": [-1], "b": 0.5}]})
    assert P.exact_data[1][1] == Fraction(1, 2)
    with pytest.raises(InputParseError):
        polytope_from_dict({"dim": 1, "facets": [{"a": ["x"], "b": "0"}]})
    with pytest.raises(InputParseError):
        polytope_from_dict({"facets": [{"a": [1, 2], "b": "0"}, {"a": [1], "b": "1"}]})


def test_permute_facets_relabels(fixtures):
    P = fixtures["pentagon"]
    perm = (4, 0, 3, 1, 2)
    Q = P.permute_facets(perm)
    np.testing.assert_array_equal(Q.A, P.A[list(perm)])
    assert match_combinatorics(P, Q, hint=tuple(int(k) for k in np.argsort(perm)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=3), st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_boxes_match_exact_oracle(widths, shifts):
    # random integer boxes: floating enumeration agrees with rational arithmetic
    n = len(widths)
    A = [[(1 if j == i else 0) for j in range(n)] for i in range(n)] + \
        [[(-1 if j == i else 0) for j in range(n)] for i in range(n)]
    b = [-shifts[i] for i in range(n)] + [shifts[i] + widths[i] for i in range(n)]
    P = from_hrep(A, b)
    ex = exact.enumerate_vertices(*P.exact_data)
    assert len(ex) == len(P.vertices) == 2 ** n
    for x, om in ex:
        k = P.incidence.index(om)
        np.testing.assert_allclose(P.vertices[k], [float(t) for t in x], atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=3, max_size=3))
def test_triangles_match_exact_oracle(coeffs):
    # x >= 0, y >= 0, p x + q y <= r: always a simple triangle
    p, q, r = coeffs
    P = from_hrep([[1, 0], [0, 1], [-p, -q]], [0, 0, r])
    ex = exact.enumerate_vertices(*P.exact_data)
    for x, om in ex:
        k = P.incidence.index(om)
        np.testing.assert_allclose(P.vertices[k], [float(t) for t in x], atol=1e-9)
