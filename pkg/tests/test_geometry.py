import numpy as np
import pytest

from ddlab import geometry
from ddlab.errors import EmptySet
from ddlab.geometry import Polygon, Polyline


UNIT_SQUARE = Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])


def test_polygon_reorients_clockwise_input():
    p = Polygon([[0, 0], [0, 1], [1, 1], [1, 0]])   # clockwise
    assert p.area > 0


def test_polygon_rejects_self_intersection():
    with pytest.raises(ValueError):
        Polygon([[0, 0], [1, 1], [1, 0], [0, 1]])


def test_signed_area_of_square():
    assert np.isclose(UNIT_SQUARE.area, 1.0)


def test_contains_interior_boundary_exterior():
    assert geometry.contains(UNIT_SQUARE, [0.5, 0.5])
    assert geometry.contains(UNIT_SQUARE, [1.0, 0.5])   # boundary counts
    assert not geometry.contains(UNIT_SQUARE, [1.5, 0.5])


def test_contains_many_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.5, 1.5, (200, 2))
    many = geometry.contains_many(UNIT_SQUARE, pts)
    one = np.array([geometry.contains(UNIT_SQUARE, p) for p in pts])
    assert (many == one).all()


def test_sample_boundary_equal_arcs_and_nesting():
    n = 64
    pts = UNIT_SQUARE.sample_boundary(n)
    assert pts.shape == (n, 2)
    # consecutive samples are one arc step apart (perimeter 4, step 4/n)
    d = np.hypot(*(np.diff(np.vstack([pts, pts[:1]]), axis=0).T))
    assert np.allclose(np.sum(d), 4.0)
    # doubling the resolution keeps every coarse sample
    fine = UNIT_SQUARE.sample_boundary(2 * n)
    assert np.allclose(fine[::2], pts)


def test_split_region_halves_square():
    cut = Polyline(np.array([[0.5, -0.0], [0.5, 1.0]]))
    left, right = geometry.split_region(cut, UNIT_SQUARE)
    assert np.isclose(left.area + right.area, 1.0, atol=1e-9)
    assert np.isclose(min(left.area, right.area), 0.5, atol=1e-9)


def test_curve_separates_probes():
    cut = Polyline(np.array([[0.5, 0.0], [0.5, 1.0]]))
    v = geometry.curve_separates(cut, UNIT_SQUARE,
                                 [[0.2, 0.5], [0.8, 0.5], [0.9, 0.9]])
    assert v.separates and sorted(v.side_counts) == [1, 2]
    v2 = geometry.curve_separates(cut, UNIT_SQUARE, [[0.2, 0.5], [0.3, 0.7]])
    assert not v2.separates


def test_parallel_triple_picks_middle_curve():
    cuts = [Polyline(np.array([[x, 0.0], [x, 1.0]])) for x in (0.25, 0.5, 0.75)]
    assert geometry.parallel_triple(*cuts, UNIT_SQUARE) == 2


def test_hausdorff_known_value():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    assert np.isclose(geometry.hausdorff(a, b), np.hypot(1, 1))
    with pytest.raises(EmptySet):
        geometry.hausdorff(a, np.empty((0, 2)))


def test_resample_polyline_spacing():
    line = np.array([[0.0, 0.0], [10.0, 0.0]])
    out = geometry.resample_polyline(line, spacing=0.5)
    seg = np.diff(out, axis=0)
    assert np.all(np.hypot(seg[:, 0], seg[:, 1]) <= 0.5 + 1e-12)
    assert np.allclose(out[0], [0, 0]) and np.allclose(out[-1], [10, 0])


def test_polyline_drops_duplicate_vertices():
    pl = Polyline(np.array([[0, 0], [0, 0], [1, 0], [1, 0], [2, 0]], float))
    assert len(pl.vertices) == 3
    assert np.isclose(pl.length, 2.0)
