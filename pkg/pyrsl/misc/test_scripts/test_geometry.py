import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.utils import DimensionMismatch, NegativeScale

eighths = st.integers(-80, 80).map(lambda k: k / 8)
unit_coords = st.floats(-1, 1, allow_nan=False, allow_infinity=False)


@st.composite
def bodies(draw, d):
    k = draw(st.integers(1, 5))
    b = draw(st.integers(0, 2))
    V = draw(arrays(np.float64, (k, d), elements=eighths))
    C = draw(arrays(np.float64, (b, d), elements=eighths))
    R = draw(arrays(np.float64, (b,), elements=st.integers(0, 40).map(lambda k: k / 8)))
    return Body(V, C, R)


def sorted_rows(P):
    P = np.asarray(P)
    return P[np.lexsort(P.T[::-1])]


def test_support_examples():
    assert geometry.support(Body.point([0, 0]), [3, 4]) == 0
    assert geometry.support(Body.ball([0, 0], 1.0), [0, 1]) == 1
    assert geometry.support(Body([[0, 0], [1, 0], [0, 1]]), [1, 1]) == 1


def test_support_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        geometry.support(Body.point([0, 0]), [1, 0, 0])
    with pytest.raises(DimensionMismatch):
        geometry.minkowski_sum(Body.point([0]), Body.point([0, 0]))


def test_minkowski_identity_element():
    a = Body([[0, 0], [2, 1], [1, 3]], [[0.5, 0.5]], [0.25])
    total = geometry.minkowski_sum(a, Body.point([0, 0]))
    assert geometry.hausdorff(total, a) <= 1e-12


def test_minkowski_segments_make_unit_square():
    total = geometry.minkowski_sum(Body([[0, 0], [1, 0]]), Body([[0, 0], [0, 1]]))
    assert np.array_equal(sorted_rows(total.vertices), [[0, 0], [0, 1], [1, 0], [1, 1]])


def test_minkowski_balls():
    total = geometry.minkowski_sum(Body.ball([0, 0], 1.0), Body.ball([1, 0], 2.0))
    dirs = geometry.direction_set(2, 64)
    assert geometry.hausdorff(total, Body.ball([1, 0], 3.0), dirs) <= 1e-12


def test_convex_hull_2d_is_counter_clockwise():
    points = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.5, 0.0], [1, 1]]
    poly = geometry.convex_hull_2d(points)
    assert np.array_equal(sorted_rows(poly), [[0, 0], [0, 1], [1, 0], [1, 1]])
    x, y = poly[:, 0], poly[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) == pytest.approx(1.0)


def test_convex_hull_2d_of_collinear_points():
    poly = geometry.convex_hull_2d([[0, 0], [2, 2], [1, 1], [3, 3]])
    assert np.array_equal(sorted_rows(poly), [[0, 0], [3, 3]])
    assert len(geometry.convex_hull_2d([[1, 1], [1, 1]])) == 1


def test_minkowski_sum_prunes_in_three_dimensions():
    cube = np.array(list(itertools.product([0.0, 1.0], repeat=3)))
    total = geometry.minkowski_sum(Body(np.vstack([cube, [[0.5, 0.5, 0.5]]])), Body.point([0, 0, 0]))
    assert np.array_equal(sorted_rows(total.vertices), sorted_rows(cube))

    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0.5, 0.5, 0]], dtype=float)
    total = geometry.minkowski_sum(Body(flat), Body.point([0, 0, 0]))
    assert len(total.vertices) == 5
    assert geometry.hausdorff(total, Body(flat), geometry.direction_set(3)) == 0.0


def test_scale_examples():
    square = Body([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert np.array_equal(geometry.scale(square, 1).vertices, square.vertices)
    assert np.array_equal(geometry.scale(square, 0).vertices, [[0, 0]])
    assert np.array_equal(geometry.scale(square, 0.5).vertices, [[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]])
    with pytest.raises(NegativeScale):
        geometry.scale(square, -1)


def test_reduce_examples():
    square = Body([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]])
    assert np.array_equal(sorted_rows(geometry.reduce(square).vertices), [[0, 0], [0, 1], [1, 0], [1, 1]])
    line = Body([[0, 0], [1, 0], [2, 0]])
    assert np.array_equal(geometry.reduce(line).vertices, [[0, 0], [2, 0]])
    assert np.array_equal(geometry.reduce(Body.point([3, 1])).vertices, [[3, 1]])


def test_reduce_preserves_value():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        b = Body(rng.uniform(-1, 1, size=(int(rng.integers(1, 9)), d)))
        assert geometry.hausdorff(b, geometry.reduce(b), geometry.direction_set(d)) <= 1e-9


def test_distance_to_hull_examples():
    cloud = PointCloud([[0, 0], [1, 0], [0, 1]])
    assert geometry.distance_to_hull([1, 0], cloud) == 0.0

    theta = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
    circle = PointCloud(np.column_stack([np.cos(theta), np.sin(theta)]))
    assert geometry.distance_to_hull([2, 0], circle) == pytest.approx(1.0, abs=2e-3)

    assert geometry.distance_to_hull([1, 1], PointCloud([[0, 0], [1, 0]])) == pytest.approx(1.0, abs=1e-9)


def _segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(max(float((p - a) @ ab) / denom, 0.0), 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def _in_triangle(p, a, b, c):
    T = np.column_stack([b - a, c - a])
    if abs(np.linalg.det(T)) < 1e-14:
        return False
    lam = np.linalg.solve(T, p - a)
    return lam.min() >= -1e-12 and lam.sum() <= 1 + 1e-12


def exact_planar_distance(p, S):
    # the hull is the union of its triangles; its boundary lies on segments between points
    if S.shape[1] == 2 and any(_in_triangle(p, *S[list(t)]) for t in itertools.combinations(range(len(S)), 3)):
        return 0.0
    pairs = list(itertools.combinations(range(len(S)), 2)) or [(0, 0)]
    return min(_segment_distance(p, S[i], S[j]) for i, j in pairs)


def test_distance_to_hull_matches_exact_oracle():
    rng = np.random.default_rng(5)
    for _ in range(300):
        d, m = int(rng.integers(1, 3)), int(rng.integers(1, 7))
        S = rng.uniform(-1, 1, size=(m, d))
        p = rng.uniform(-1.5, 1.5, size=d)
        assert geometry.distance_to_hull(p, PointCloud(S)) == pytest.approx(exact_planar_distance(p, S), abs=1e-6)


def test_hull_weights_reproduce_interior_point():
    S = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    dist, w = geometry.hull_weights([0.5, 0.5], S)
    assert dist == 0.0
    assert w.sum() == pytest.approx(1.0)
    assert np.linalg.norm(w @ S - [0.5, 0.5]) <= 1e-8


def test_distance_to_body_with_balls():
    body = Body([[0, 0], [1, 0]], [[0, 0]], [0.5])
    assert geometry.distance_to_body([0.5, 0.4], body) == 0.0
    assert geometry.distance_to_body([0.5, 2.0], body) == pytest.approx(1.5, abs=1e-9)


def test_hausdorff_examples():
    a = Body([[0, 0], [1, 2]])
    assert geometry.hausdorff(a, a) == 0.0
    assert geometry.hausdorff(Body.interval(0, 1), Body.interval(0, 2), geometry.direction_set(1)) == 1.0
    grid = PointCloud((np.arange(11) / 10).reshape(-1, 1))
    assert geometry.hausdorff(grid, Body.interval(0, 1)) == pytest.approx(0.05, abs=1e-12)


def test_hausdorff_cloud_against_planar_polytope():
    corners = [[0, 0], [1, 0], [0, 1], [1, 1]]
    assert geometry.hausdorff(PointCloud(corners), Body(corners)) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    # 49 points take the Voronoi route
    g = np.arange(7) / 6
    lattice = PointCloud(np.array([[x, y] for x in g for y in g]))
    assert geometry.hausdorff(lattice, Body(corners)) == pytest.approx(np.sqrt(2) / 12, abs=1e-12)


def test_hausdorff_between_clouds_is_exact():
    a = PointCloud([[0.0], [1.0]])
    b = PointCloud([[0.0], [0.25], [1.0]])
    assert geometry.hausdorff(a, b) == 0.25


def test_extreme_points_examples():
    square = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]])
    assert len(geometry.extreme_points(square)) == 4
    triangle = PointCloud([[0, 0], [1, 0], [0, 1]])
    assert len(geometry.extreme_points(triangle)) == 3
    theta = 2 * np.pi * np.arange(16) / 16
    circle = PointCloud(np.column_stack([np.cos(theta), np.sin(theta)]))
    assert len(geometry.extreme_points(circle)) == 16


def test_krein_milman_and_milman_converse():
    rng = np.random.default_rng(11)
    for _ in range(200):
        d, m = int(rng.integers(1, 4)), int(rng.integers(1, 13))
        cloud = PointCloud(rng.uniform(-1, 1, size=(m, d)))
        ext = geometry.extreme_points(cloud)
        gap = geometry.hausdorff(Body(ext.points), Body(cloud.points), geometry.direction_set(d))
        assert gap <= 1e-9

        keep = rng.random(m) < 0.7
        B = cloud.points[keep]
        if len(B) and all(geometry.distance_to_hull(p, B) == 0.0 for p in cloud.points):
            for p in ext.points:
                assert np.min(np.max(np.abs(B - p), axis=1)) == 0.0


def test_direction_sets():
    assert len(geometry.direction_set(1)) == 2
    assert len(geometry.direction_set(2)) == 256
    assert len(geometry.direction_set(3)) == 512
    assert len(geometry.direction_set(5)) == 10 + 1024
    for d in (2, 3, 5):
        U = geometry.direction_set(d).directions
        assert np.all(np.abs(np.linalg.norm(U, axis=1) - 1) <= 1e-12)
    assert np.array_equal(geometry.direction_set(4, seed=9).directions, geometry.direction_set(4, seed=9).directions)


def test_merge_points_keeps_first_occurrence():
    P = np.array([[0.0], [1.0], [1.0 + 1e-14], [0.0], [2.0]])
    assert np.array_equal(geometry.merge_points(P), [[0.0], [1.0], [2.0]])


def test_empty_and_non_finite_inputs_rejected():
    with pytest.raises(ValueError):
        Body(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        PointCloud([[np.nan, 0.0]])
    with pytest.raises(ValueError):
        Body([[0, 0]], [[0, 0]], [-1.0])


@settings(deadline=None)
@given(st.data())
def test_support_is_additive(data):
    d = data.draw(st.integers(1, 3))
    a, b = data.draw(bodies(d)), data.draw(bodies(d))
    u = data.draw(arrays(np.float64, (d,), elements=unit_coords))
    ha, hb = geometry.support(a, u), geometry.support(b, u)
    total = geometry.support(geometry.minkowski_sum(a, b), u)
    assert abs(total - ha - hb) <= 1e-12 * (1 + abs(ha) + abs(hb))


@settings(deadline=None)
@given(st.data())
def test_support_is_positively_homogeneous(data):
    d = data.draw(st.integers(1, 3))
    b = data.draw(bodies(d))
    u = data.draw(arrays(np.float64, (d,), elements=unit_coords))
    lam = data.draw(st.floats(0, 100, allow_nan=False))
    h = geometry.support(b, u)
    assert abs(geometry.support(b, lam * u) - lam * h) <= 1e-12 * (1 + abs(lam * h))
