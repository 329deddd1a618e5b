import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull, HalfspaceIntersection

from percolab.wulff import (
    GeometryError,
    NormTable,
    Polytope,
    candidate_battery,
    dilate_to_volume,
    isoperimetric_check,
    load_norm_table,
    phi_of_p,
    quasi_uniform_directions,
    surface_tension,
    volume,
    wulff_set,
)


def ellipse_norm(count=180):
    # support function of an axis-aligned ellipse with semi-axes 2 and 1
    return NormTable.from_function(lambda v: math.hypot(2 * v[0], v[1]), 2, count)


@pytest.mark.parametrize("d", [2, 3])
def test_directions_unit_and_spread(d):
    u = quasi_uniform_directions(d, 50)
    assert u.shape == (50, d)
    assert np.allclose(np.linalg.norm(u, axis=1), 1, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_l1_wulff_is_cube(d):
    w = wulff_set(NormTable.l1(d), 64)
    assert math.isclose(volume(w), 2.0**d, rel_tol=1e-9)
    assert np.allclose(np.max(np.abs(w.vertices), axis=0), 1.0)
    assert math.isclose(surface_tension(w, NormTable.l1(d)), 2.0**d * d, rel_tol=1e-9)


def test_constant_norm_disc():
    norm = NormTable.constant(2, 360)
    w = wulff_set(norm, 64)
    assert abs(volume(w) - math.pi) / math.pi < 1e-3
    assert abs(surface_tension(w, norm) - 2 * math.pi) / (2 * math.pi) < 5e-3


def test_linf_wulff_matches_direct_halfspaces():
    norm = NormTable.linf(2)
    w = wulff_set(norm, 8)
    # direct intersection at the listed directions with scipy
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    vals = np.max(np.abs(dirs), axis=1)
    hs = HalfspaceIntersection(np.hstack([dirs, -vals[:, None]]), np.zeros(2))
    assert math.isclose(volume(w), ConvexHull(hs.intersections).volume, rel_tol=1e-9)
    assert math.isclose(volume(w), 2.0, rel_tol=1e-9)
    corners = {tuple(np.round(v, 9)) for v in w.vertices}
    assert corners == {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}


def test_norm_table_lookup_and_extension():
    norm = NormTable.l1(2)
    assert norm([1, 0]) == 1.0 and norm([0, -3]) == 3.0
    # off-sample directions use the support function of the sample Wulff set
    assert math.isclose(norm([1, 1]), 2.0)
    with pytest.raises(ValueError):
        NormTable([[1, 0]], [-1.0])
    with pytest.raises(ValueError):
        NormTable([[1, 0], [-1, 0]], [1.0, 2.0])


def test_norm_table_text_round_trip(tmp_path):
    norm = ellipse_norm(36)
    path = tmp_path / "norm.txt"
    path.write_text(norm.dumps())
    back = load_norm_table(path)
    assert np.array_equal(back.directions, norm.directions)
    assert np.array_equal(back.values, norm.values)
    with pytest.raises(ValueError):
        NormTable.loads("1 0\n")
    with pytest.raises(ValueError):
        NormTable.loads("1 0 x\n")


def test_unbounded_halfspaces_rejected():
    with pytest.raises(GeometryError):
        Polytope.from_halfspaces(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]), [1, 1, 1])


def test_too_few_directions():
    with pytest.raises(ValueError):
        wulff_set(NormTable.l1(2), 3)


@given(st.floats(0.1, 10))
def test_scaling_laws(lam):
    norm = ellipse_norm(40)
    w = wulff_set(norm, 32)
    s = w.scaled(lam)
    assert math.isclose(volume(s), lam**2 * volume(w), rel_tol=1e-12)
    assert math.isclose(surface_tension(s, norm), lam * surface_tension(w, norm), rel_tol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_facet_volume_matches_simplex_volume(d):
    for _, poly in candidate_battery(d, random_count=5, seed=3):
        assert poly.is_consistent()
        assert math.isclose(poly.volume(), poly.simplex_volume(), rel_tol=1e-9)
        assert math.isclose(poly.volume(), ConvexHull(poly.vertices).volume, rel_tol=1e-9)


def test_dilate_examples():
    cube = Polytope.cube(2)
    one = dilate_to_volume(cube, 1.0)
    assert math.isclose(volume(one), 1.0, rel_tol=1e-12)
    assert np.allclose(np.max(one.vertices, axis=0), 0.5)
    same = dilate_to_volume(cube, 4.0)
    assert np.allclose(same.vertices, cube.vertices)
    disc = dilate_to_volume(Polytope.ball(2, 200), 2.0)
    assert math.isclose(volume(disc), 2.0, rel_tol=1e-9)
    with pytest.raises(ValueError):
        dilate_to_volume(cube, 0.0)


@pytest.mark.parametrize("d,expected", [(2, 4.0), (3, 6.0)])
def test_phi_l1(d, expected):
    res = phi_of_p(NormTable.l1(d), 1.0)
    assert not res.degenerate and math.isclose(res.value, expected, rel_tol=1e-9)


@given(st.floats(0.05, 20), st.floats(0.05, 1))
def test_phi_homogeneity(t, theta):
    base = NormTable.axis_symmetric(2, [1.0, 0.5])
    a = phi_of_p(base, theta).value
    assert math.isclose(phi_of_p(base.scaled(t), theta).value, t * a, rel_tol=1e-9)


@given(st.floats(0.05, 1))
def test_phi_dilation_in_theta(theta):
    norm = NormTable.l1(2)
    assert math.isclose(phi_of_p(norm, theta).value, 4.0 * theta ** (-0.5), rel_tol=1e-9)


def test_phi_degenerate_and_domain():
    tiny = NormTable.l1(2).scaled(1e-15)
    res = phi_of_p(tiny, 0.5)
    assert res.degenerate and res.value == 0.0
    with pytest.raises(ValueError):
        phi_of_p(NormTable.l1(2), 0.0)


@pytest.mark.parametrize(
    "norm",
    [NormTable.l1(2), NormTable.constant(2, 360), ellipse_norm()],
    ids=["l1", "constant", "ellipse"],
)
def test_wulff_set_is_optimal(norm):
    rep = isoperimetric_check(norm, candidate_battery(2, 20, seed=1), slack=1e-6)
    assert rep.wulff_is_minimal, rep.best_candidate


def test_disc_beats_square_for_constant_norm():
    norm = NormTable.constant(2, 360)
    rep = isoperimetric_check(norm, [("cube", Polytope.cube(2)), ("ball", Polytope.ball(2, 360))])
    vals = dict(rep.candidates)
    assert math.isclose(vals["cube"], 4.0, rel_tol=1e-3)
    assert abs(vals["ball"] - 2 * math.sqrt(math.pi)) < 1e-3
    assert vals["ball"] < vals["cube"]


def test_single_candidate_is_itself():
    norm = ellipse_norm(60)
    w = wulff_set(norm, 64)
    assert isoperimetric_check(norm, [w]).wulff_is_minimal
    with pytest.raises(ValueError):
        isoperimetric_check(norm, [])
