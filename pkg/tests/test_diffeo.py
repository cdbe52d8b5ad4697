import sys

import numpy as np
import pytest

from momentangle.collar import build_collars, make_xi, safe_width
from momentangle.diffeo import (BaseMap, base_map_affine, base_map_external, base_map_structure_composite,
                                compose, identity_map, lift, structure_conjugate,
                                verify_equivariant_diffeo, verify_wall_derivatives)
from momentangle.errors import (C1Violation, ExternalMapError, NotAffinelyEquivalent,
                                TargetMembershipViolation)
from momentangle.gale import complement_matrix
from momentangle.fixtures import fixture_dict
from momentangle.geometry import embed_jP, from_hrep, polytope_from_dict, project_to_base
from momentangle.manifold import membership_residual, sample_points

AFFINE_PAIRS = [("square", "square"), ("segment", "segment2"), ("simplex2", "simplex2_scaled"),
                ("square", "parallelogram"), ("cube", "box3_scaled")]

SCALE_SCRIPT = """
import json, sys
k = float(sys.argv[1])
for line in sys.stdin:
    x = json.loads(line)["x"]
    print(json.dumps({"gx": [k * t for t in x]}))
"""


def _status(cert):
    return {c["name"]: c["status"] for c in cert["checks"]}


def test_affine_examples(fixtures):
    P = fixtures["square"]
    g = base_map_affine(P, P)
    np.testing.assert_allclose(g.info["M"], np.eye(2), atol=1e-12)
    np.testing.assert_allclose(g.info["d"], 0, atol=1e-12)
    # 2 P + (1, 1)
    Q = from_hrep(P.A, 2 * P.b - P.A @ [1.0, 1.0])
    g = base_map_affine(P, Q)
    np.testing.assert_allclose(g.info["M"], 2 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(g.info["d"], [1, 1], atol=1e-12)
    with pytest.raises(NotAffinelyEquivalent):
        base_map_affine(P, fixtures["quadrilateral"])


def test_affine_maps_are_diagonal_in_slack(fixtures):
    for a, b in AFFINE_PAIRS:
        g = base_map_affine(fixtures[a], fixtures[b])
        Y = embed_jP(g.source, project_to_base(g.source, sample_points(g.source, complement_matrix(g.source),
                                                                         50, seed=1) ** 2))
        np.testing.assert_allclose(g.on_y(Y), embed_jP(g.target, g(project_to_base(g.source, Y))), atol=1e-12)
        assert g.facet_compatibility_residual() < 1e-8


def test_segment_lift_example(fixtures):
    g = base_map_affine(fixtures["segment"], fixtures["segment2"])
    f = lift(g)
    np.testing.assert_allclose(f([2 ** -0.5, 2 ** -0.5]), [1, 1], atol=1e-15)
    # wall derivative of R -> sqrt(2 R**2) is sqrt(2)
    h = 1e-5
    R = np.array([0.0, h, 2 * h])
    U = np.stack([R, np.sqrt(1 - R ** 2)], axis=1)
    G = f(U)[:, 0]
    assert abs((-3 * G[0] + 4 * G[1] - G[2]) / (2 * h) - np.sqrt(2)) < 1e-6


def test_identity_lift_is_identity(any_polytope):
    P = any_polytope
    f = lift(identity_map(P))
    U = sample_points(P, complement_matrix(P), 200, seed=3)
    assert f(U).tobytes() == U.tobytes()
    cert = verify_equivariant_diffeo(f, probes=50)
    assert cert["status"] == "pass", _status(cert)
    for c in cert["checks"]:
        if c["name"] in ("equivariance", "orbit_compatibility", "round_trip"):
            assert c["residual"] == 0.0


def test_lift_is_bit_exact_equivariant_including_signed_zeros(fixtures, rng):
    P = fixtures["simplex2"]
    f = lift(base_map_affine(P, fixtures["simplex2_scaled"]))
    U = sample_points(P, f.QS_P, 100, seed=4)
    base = f(U)
    for _ in range(64):
        s = rng.choice([-1.0, 1.0], size=P.m)
        assert f(s * U).tobytes() == (s * base).tobytes()


def test_orbit_compatibility_and_stabilizers(fixtures):
    g = base_map_affine(fixtures["square"], fixtures["parallelogram"])
    f = lift(g)
    U = sample_points(g.source, f.QS_P, 200, seed=5)
    out = f(U)
    np.testing.assert_array_equal(U == 0, out == 0)
    np.testing.assert_allclose(project_to_base(g.target, out * out), g(project_to_base(g.source, U * U)),
                               atol=1e-9)
    assert membership_residual(f.QS_Q, out).max() < 1e-8


@pytest.mark.parametrize("pair", AFFINE_PAIRS)
def test_affine_certificates_pass(fixtures, pair):
    cert = verify_equivariant_diffeo(lift(base_map_affine(*(fixtures[k] for k in pair))))
    assert cert["status"] == "pass", _status(cert)
    assert _status(cert) == {k: "pass" for k in ("membership", "equivariance", "stabilizers",
                                                  "orbit_compatibility", "round_trip", "facet_compatibility",
                                                  "base_bijectivity", "wall_derivatives",
                                                  "jacobian_nondegenerate")}


def test_scaled_simplex_round_trip(fixtures):
    cert = verify_equivariant_diffeo(lift(base_map_affine(fixtures["simplex2"], fixtures["simplex2_scaled"])))
    rt = next(c for c in cert["checks"] if c["name"] == "round_trip")
    assert rt["residual"] < 1e-9


def test_composition_coherence(fixtures):
    P, Q, R = fixtures["square"], fixtures["parallelogram"], fixtures["square"]
    g1 = base_map_affine(P, Q)
    g2 = base_map_affine(Q, R)
    U = sample_points(P, complement_matrix(P), 200, seed=6)
    whole = lift(compose(g2, g1))(U)
    # lifted coordinates come in source facet order; put them back in Q's order in between
    sigma1 = list(g1.sigma)
    parts = lift(g2)(lift(g1)(U)[:, np.argsort(sigma1)])
    np.testing.assert_allclose(whole, parts[:, sigma1], atol=1e-9)


def test_composition_respects_relabelling(fixtures):
    P = fixtures["square"]
    d = fixture_dict("square")
    d["facets"] = d["facets"][::-1]
    Q = polytope_from_dict(d)
    g1 = base_map_affine(P, Q)
    g = compose(identity_map(Q), g1)
    assert g.sigma == g1.sigma
    U = sample_points(P, complement_matrix(P), 50, seed=7)
    np.testing.assert_allclose(lift(g)(U), lift(g1)(U), atol=1e-12)


def test_structure_composite_box_example(fixtures):
    P = fixtures["square"]
    g = base_map_structure_composite(P, build_collars(P, 1.0, check=False), make_xi(1.0))
    np.testing.assert_allclose(g([[0.03, 0.5]]), [[0.0009, 0.5]], atol=1e-15)
    np.testing.assert_allclose(g([[0.5, 0.5]]), [[0.5, 0.5]], atol=1e-15)
    X = project_to_base(P, sample_points(P, complement_matrix(P), 100, seed=8) ** 2)
    assert g.bijectivity_residual(X) < 1e-8


def test_structure_conjugate_on_box(fixtures):
    P = fixtures["square"]
    g = structure_conjugate(P, P)
    assert g.info["delta_Q"] == pytest.approx(0.5 * safe_width(P))
    f = lift(g)
    rep = verify_wall_derivatives(f)
    assert rep["ok"], rep.get("failure")
    # near a wall both corner maps act as squares, so the chart-collapsed derivative is 1
    h = 1e-5
    R = np.array([0.0, h, 2 * h])
    U = np.stack([R, np.sqrt(1 - R ** 2), np.full(3, 0.5 ** 0.5), np.full(3, 0.5 ** 0.5)], axis=1)
    G = f(U)[:, 0]
    assert abs((-3 * G[0] + 4 * G[1] - G[2]) / (2 * h) - 1) < 1e-4
    cert = verify_equivariant_diffeo(lift(g), probes=50)
    assert cert["status"] == "pass", _status(cert)


def test_structure_conjugate_between_simplices(fixtures):
    cert = verify_equivariant_diffeo(lift(structure_conjugate(fixtures["simplex2"], fixtures["simplex2_scaled"])),
                                     probes=50)
    assert cert["status"] == "pass", _status(cert)


def test_bare_corner_map_lift_is_flat_at_walls(fixtures):
    # F takes linear corners to quadratic ones, so between quadratic charts its lift has zero wall derivative
    P = fixtures["square"]
    CS = build_collars(P)
    f = lift(base_map_structure_composite(P, CS, make_xi(CS.delta)))
    rep = verify_wall_derivatives(f)
    assert not rep["ok"]
    assert rep["failure"]["reason"] == "diagonal derivative not positive"
    with pytest.raises(C1Violation):
        verify_wall_derivatives(f, raise_on_failure=True)


def test_corrupted_pairing_is_caught(fixtures):
    P = fixtures["square"]
    g = BaseMap(P, P, lambda X: X.copy(), lambda X: X.copy(), "affine", sigma=(2, 1, 0, 3))
    f = lift(g)
    with pytest.raises(TargetMembershipViolation):
        f(sample_points(P, f.QS_P, 20, seed=0))
    cert = verify_equivariant_diffeo(f, probes=20)
    assert cert["status"] == "fail"
    mem = next(c for c in cert["checks"] if c["name"] == "membership")
    assert mem["error"] == "TargetMembershipViolation"
    assert _status(cert)["facet_compatibility"] == "fail"


def test_base_map_validation(fixtures):
    P = fixtures["square"]
    with pytest.raises(ValueError):
        BaseMap(P, P, lambda X: X, kind="magic")
    with pytest.raises(ValueError):
        BaseMap(P, P, lambda X: X, sigma=(0, 0, 1, 2))
    with pytest.raises(ValueError):
        BaseMap(P, fixtures["simplex2"], lambda X: X)
    with pytest.raises(ValueError):
        BaseMap(P, P, lambda X: X).inverse()


def test_certificate_without_inverse_fails(fixtures):
    P = fixtures["segment"]
    cert = verify_equivariant_diffeo(lift(BaseMap(P, P, lambda X: X.copy())), probes=20)
    st = _status(cert)
    assert st["round_trip"] == "fail" and st["base_bijectivity"] == "fail"
    assert st["membership"] == "pass"


@pytest.fixture
def scale_script(tmp_path):
    path = tmp_path / "scale.py"
    path.write_text(SCALE_SCRIPT)
    return path


def test_external_map(fixtures, scale_script):
    S, S2 = fixtures["segment"], fixtures["segment2"]
    g = base_map_external(S, S2, f"{sys.executable} {scale_script} 2", f"{sys.executable} {scale_script} 0.5")
    np.testing.assert_allclose(g([[0.25], [0.5]]), [[0.5], [1.0]])
    cert = verify_equivariant_diffeo(lift(g), probes=30, wall_probes=4)
    assert cert["status"] == "pass", _status(cert)
    assert cert["map"]["kind"] == "user-supplied"


def test_external_map_errors(fixtures, scale_script, tmp_path):
    S = fixtures["segment"]
    bad = tmp_path / "bad.py"
    bad.write_text("import sys\nsys.stdin.read()\nprint('not json')\n")
    g = base_map_external(S, S, f"{sys.executable} {bad}", f"{sys.executable} {bad}")
    with pytest.raises(ExternalMapError):
        g([[0.5]])
    with pytest.raises(ExternalMapError):
        base_map_external(S, S, "/nonexistent/evaluator", "/nonexistent/evaluator")([[0.5]])
    crash = tmp_path / "crash.py"
    crash.write_text("import sys\nsys.exit(3)\n")
    with pytest.raises(ExternalMapError):
        base_map_external(S, S, f"{sys.executable} {crash}", "x")([[0.5]])
    cert = verify_equivariant_diffeo(lift(g), probes=10)
    assert cert["status"] == "fail"
    assert next(c for c in cert["checks"] if c["name"] == "membership")["error"] == "ExternalMapError"


def test_wall_harness_is_thread_independent(fixtures):
    f = lift(base_map_affine(fixtures["pentagon"], fixtures["pentagon"]))
    assert verify_wall_derivatives(f, threads=1) == verify_wall_derivatives(f, threads=3)
