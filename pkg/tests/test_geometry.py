"""Tests for convex-hull construction and the roughness functionals."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from droplet_lab.geometry import (
    alr,
    boundary_distances,
    convex_hull,
    diameters,
    enclosed_area,
    euclidean_diameter,
    hausdorff_to_wulff,
    hull_area,
    hull_perimeter,
    mlr,
    point_segment_distances,
    polygon_centroid,
    support_function,
)


def _segment_distance_scalar(p, a, b) -> float:
    """Plain point-to-segment distance, written independently as an oracle."""
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _mlr_oracle(closed_verts) -> float:
    """O(n*m) maximal distance of walk vertices to the hull boundary."""
    verts = np.asarray(closed_verts, dtype=np.float64)[:-1]
    hull = convex_hull(verts)
    worst = 0.0
    m = len(hull)
    for p in verts:
        best = math.inf
        for i in range(m):
            best = min(best, _segment_distance_scalar(p, hull[i], hull[(i + 1) % m]))
        worst = max(worst, best)
    return worst


def _closed_rectangle(w: int, h: int) -> np.ndarray:
    """Unit-step closed boundary walk of a w x h rectangle, CCW from origin."""
    pts = []
    for i in range(w):
        pts.append((i, 0))
    for j in range(h):
        pts.append((w, j))
    for i in range(w, 0, -1):
        pts.append((i, h))
    for j in range(h, 0, -1):
        pts.append((0, j))
    pts.append((0, 0))
    return np.array(pts, dtype=np.int64)


class TestConvexHull:
    def test_square_with_interior_points(self):
        pts = np.array([[0, 0], [4, 0], [4, 4], [0, 4], [2, 2], [1, 3], [2, 0]])
        hull = convex_hull(pts)
        assert [tuple(v) for v in hull] == [(0, 0), (4, 0), (4, 4), (0, 4)]

    def test_ccw_orientation_and_start(self):
        rng = np.random.default_rng(0)
        pts = rng.integers(-50, 50, size=(200, 2))
        hull = convex_hull(pts)
        x, y = hull[:, 0], hull[:, 1]
        area2 = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
        assert area2 > 0  # counterclockwise
        assert tuple(hull[0]) == tuple(min(map(tuple, pts)))
        # No three consecutive vertices collinear.
        for i in range(len(hull)):
            o, a, b = hull[i - 2], hull[i - 1], hull[i]
            cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
            assert cross != 0

    def test_duplicates_collapsed(self):
        pts = np.array([[0, 0], [0, 0], [1, 0], [1, 0], [0, 1], [0, 1]])
        hull = convex_hull(pts)
        assert len(hull) == 3

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            convex_hull(np.array([[0, 0], [1, 1]]))
        with pytest.raises(ValueError):
            convex_hull(np.array([[0, 0], [1, 1], [2, 2], [3, 3]]))

    def test_float_path_matches_int_path(self):
        # The same point cloud through exact integer hulling and qhull.
        rng = np.random.default_rng(3)
        prefix = rng.integers(-30, 30, size=(4096, 2))
        h_int = convex_hull(prefix.astype(np.int64))
        h_flt = convex_hull(prefix.astype(np.float64))
        assert np.allclose(h_int.astype(float), h_flt)

    @settings(max_examples=60)
    @given(
        st.lists(
            st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
            min_size=3,
            max_size=60,
        )
    )
    def test_hull_contains_all_points(self, raw):
        pts = np.array(raw, dtype=np.int64)
        try:
            hull = convex_hull(pts)
        except ValueError:
            return  # degenerate draw
        # Every input point is inside or on the hull: all edge cross products >= 0.
        nxt = np.roll(hull, -1, axis=0)
        for p in pts:
            cross = (nxt[:, 0] - hull[:, 0]) * (p[1] - hull[:, 1]) - (
                nxt[:, 1] - hull[:, 1]
            ) * (p[0] - hull[:, 0])
            assert (cross >= 0).all()


class TestAreaPerimeter:
    def test_rectangle(self):
        hull = np.array([[0, 0], [5, 0], [5, 3], [0, 3]])
        assert hull_area(hull) == 15.0
        assert hull_perimeter(hull) == 16.0

    def test_enclosed_area_walk(self):
        walk = _closed_rectangle(4, 2)
        assert enclosed_area(walk) == 8.0

    def test_enclosed_area_pinched_walk(self):
        # Two unit cells joined at one corner, traversed as a single walk.
        walk = np.array(
            [
                [0, 0], [1, 0], [1, 1], [2, 1], [2, 2], [1, 2], [1, 1], [0, 1], [0, 0],
            ]
        )
        assert enclosed_area(walk) == 2.0

    def test_enclosed_area_requires_closure(self):
        with pytest.raises(ValueError):
            enclosed_area(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]))

    def test_centroid(self):
        sq = np.array([[0, 0], [2, 0], [2, 2], [0, 2]])
        assert np.allclose(polygon_centroid(sq), [1.0, 1.0])
        tri = np.array([[0, 0], [3, 0], [0, 3]])
        assert np.allclose(polygon_centroid(tri), [1.0, 1.0])


class TestRoughness:
    def test_convex_walks_have_zero_roughness(self):
        for w, h in [(1, 1), (3, 2), (5, 5), (7, 1)]:
            walk = _closed_rectangle(w, h)
            assert alr(walk) == 0.0
            assert mlr(walk) == 0.0

    def test_single_notch(self):
        # 4x4 square with a 1x1 notch removed from the top edge.
        walk = np.array(
            [
                [0, 0], [1, 0], [2, 0], [3, 0], [4, 0],
                [4, 1], [4, 2], [4, 3], [4, 4],
                [3, 4], [3, 3], [2, 3], [2, 4], [1, 4], [0, 4],
                [0, 3], [0, 2], [0, 1], [0, 0],
            ]
        )
        assert enclosed_area(walk) == 15.0
        assert alr(walk) == pytest.approx(1.0 / 16.0)
        assert mlr(walk) == pytest.approx(1.0)

    def test_mlr_matches_oracle_on_droplets(self, sampled_droplets):
        for rec in sampled_droplets:
            verts = rec.circuit.vertices
            got = mlr(verts)
            want = _mlr_oracle(verts)
            assert got == pytest.approx(want, abs=1e-9)

    def test_alr_bounded_by_mlr_on_droplets(self, sampled_droplets):
        # Trapped area is at most max-depth times hull perimeter.
        for rec in sampled_droplets:
            verts = rec.circuit.vertices
            assert 0.0 <= alr(verts) <= mlr(verts) + 1e-12

    def test_boundary_distances_interior_point(self):
        hull = np.array([[0, 0], [4, 0], [4, 4], [0, 4]], dtype=float)
        d = boundary_distances(np.array([[1.0, 2.0], [2.0, 2.0], [0.0, 0.0]]), hull)
        assert d == pytest.approx([1.0, 2.0, 0.0])

    @settings(max_examples=40)
    @given(
        st.lists(
            st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
            min_size=4,
            max_size=30,
        ),
        st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95)),
    )
    def test_boundary_distance_equals_segment_distance_inside(self, raw, bary):
        pts = np.array(raw, dtype=np.int64)
        try:
            hull = convex_hull(pts)
        except ValueError:
            return
        # A strictly interior point: convex combination of three hull vertices.
        w = np.array(bary)
        w /= w.sum()
        idx = [0, len(hull) // 3, (2 * len(hull)) // 3]
        if len(set(idx)) < 3:
            return
        q = (hull[idx].astype(float) * w[:, None]).sum(axis=0)
        got = boundary_distances(q[None, :], hull)[0]
        m = len(hull)
        want = min(
            _segment_distance_scalar(q, hull[i], hull[(i + 1) % m]) for i in range(m)
        )
        assert got == pytest.approx(want, abs=1e-9)


class TestDiameters:
    def test_known_square(self):
        pts = np.array([[0, 0], [3, 0], [3, 3], [0, 3], [1, 1]])
        assert euclidean_diameter(pts) == pytest.approx(3 * math.sqrt(2))

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            pts = rng.normal(size=(rng.integers(2, 120), 2)) * 10
            brute = max(
                np.linalg.norm(a - b) for a in pts for b in pts
            )
            assert euclidean_diameter(pts) == pytest.approx(brute, rel=1e-12)

    def test_degenerate_sets(self):
        assert euclidean_diameter(np.array([[2, 3]])) == 0.0
        assert euclidean_diameter(np.array([[0, 0], [3, 4]])) == 5.0
        # Collinear clouds larger than the hull shortcut threshold.
        line = np.stack([np.arange(100), 2 * np.arange(100)], axis=1)
        assert euclidean_diameter(line) == pytest.approx(99 * math.sqrt(5))

    def test_norm_diameter(self):
        pts = np.array([[0, 0], [3, 0], [0, 4]])

        def l1(v):
            v = np.asarray(v, dtype=float)
            return np.abs(v).sum(axis=-1)

        euclid, taud = diameters(pts, norm=l1)
        assert euclid == 5.0
        assert taud == 7.0  # |(3,0) - (0,4)|_1
        euclid2, none = diameters(pts)
        assert euclid2 == 5.0 and none is None


class TestPointSegmentDistances:
    @settings(max_examples=50)
    @given(
        st.lists(
            st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
            min_size=1,
            max_size=12,
        ),
        st.lists(
            st.tuples(
                st.floats(-10, 10), st.floats(-10, 10),
                st.floats(-10, 10), st.floats(-10, 10),
            ),
            min_size=1,
            max_size=8,
        ),
    )
    def test_matches_scalar_oracle(self, raw_pts, raw_segs):
        pts = np.array(raw_pts)
        a = np.array([[s[0], s[1]] for s in raw_segs])
        b = np.array([[s[2], s[3]] for s in raw_segs])
        got = point_segment_distances(pts, a, b)
        for i, p in enumerate(pts):
            want = min(
                _segment_distance_scalar(p, a[j], b[j]) for j in range(len(a))
            )
            assert got[i] == pytest.approx(want, abs=1e-9)


class TestHausdorff:
    def test_self_fit_is_tiny(self):
        ang = np.linspace(0, 2 * np.pi, 48, endpoint=False)
        poly = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        walk = poly * 7.5 + np.array([3.0, -2.0])
        d = hausdorff_to_wulff(walk, poly)
        assert d < 5e-3

    def test_translation_and_scale_invariance(self):
        ang = np.linspace(0, 2 * np.pi, 40, endpoint=False)
        poly = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        rng = np.random.default_rng(5)
        walk = poly * 5.0 + rng.normal(scale=0.08, size=poly.shape)
        d1 = hausdorff_to_wulff(walk, poly)
        d2 = hausdorff_to_wulff(walk * 3.0 + np.array([10.0, 4.0]), poly)
        assert d1 == pytest.approx(d2, abs=5e-3)

    def test_square_against_circle_is_large(self):
        ang = np.linspace(0, 2 * np.pi, 96, endpoint=False)
        circle = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        square = _closed_rectangle(10, 10)[:-1].astype(float)
        d = hausdorff_to_wulff(square, circle)
        # Known misfit between a square and its equal-area circle, as a
        # fraction of the circle radius: roughly (sqrt(2) - 1)/sqrt(pi/4)-ish.
        assert 0.1 < d < 0.4


class TestSupportFunction:
    def test_unit_square(self):
        sq = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
        dirs = np.array([[1, 0], [0, 1], [1, 1], [-1, 0.5]])
        vals = support_function(sq, dirs)
        assert vals == pytest.approx([1.0, 1.0, 2.0, 1.5])

    def test_batch_shape(self):
        sq = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
        dirs = np.ones((3, 4, 2))
        assert support_function(sq, dirs).shape == (3, 4)
