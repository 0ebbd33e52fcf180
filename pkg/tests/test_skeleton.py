"""Tests for hull coarse-graining, annuli, and side tubes."""

from __future__ import annotations

import math

import numpy as np
import pytest

from droplet_lab.geometry import convex_clip_area, convex_hull, mlr
from droplet_lab.skeleton import (
    AnnulusTube,
    HullSkeleton,
    annulus_and_tubes,
    audit_properties,
    circuit_confined,
    hull_skeleton,
    load_skeleton_constants,
    load_skeleton_corpus,
    long_side_length_sum,
    long_sides,
    scale_params,
    tau_diameter,
)

SQRT_PI = math.sqrt(math.pi)


def _euclid(v):
    arr = np.atleast_2d(np.asarray(v, dtype=np.float64))
    out = np.linalg.norm(arr, axis=1)
    return out if np.asarray(v).ndim > 1 else float(out[0])


def _square(side: float) -> np.ndarray:
    s = side
    return np.array([[0, 0], [s, 0], [s, s], [0, s], [0, 0]], dtype=np.float64)


def _circle_points(radius: float, n: int) -> np.ndarray:
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.vstack([pts, pts[:1]])


def _thin_hexagon() -> np.ndarray:
    # Euclidean diameter 10 between (0, 0) and (10, 0); every other pairwise
    # gap along the boundary walk stays below 5.
    return np.array(
        [
            [0.0, 0.0],
            [3.0, -0.5],
            [7.0, -0.5],
            [10.0, 0.0],
            [7.0, 0.5],
            [3.0, 0.5],
            [0.0, 0.0],
        ]
    )


class TestScaleParams:
    def test_formula_values(self):
        l = math.e**2
        s, d = scale_params(l, theta=0.5, inward_distance_coef=1.0)
        assert s == pytest.approx(
            math.sqrt(0.5 * SQRT_PI / 2.0) * math.e ** (4 / 3) * 2 ** (-1 / 3)
        )
        assert d == pytest.approx(math.e ** (2 / 3) * 2 ** (-2 / 3))

    def test_log_correction_slope(self):
        # s / l^(2/3) against log l falls with exponent exactly -1/3.
        ls = np.geomspace(10, 1e6, 25)
        vals = np.array(
            [scale_params(l, 0.3, inward_distance_coef=2.0)[0] for l in ls]
        )
        y = np.log(vals / ls ** (2 / 3))
        x = np.log(np.log(ls))
        slope = np.polyfit(x, y, 1)[0]
        assert slope == pytest.approx(-1 / 3, abs=1e-9)

    def test_d_below_s_for_moderate_theta(self):
        for l in np.geomspace(10, 1e6, 40):
            for theta in (0.1, 0.3, 0.5):
                s, d = scale_params(l, theta, inward_distance_coef=1.0)
                assert d < s

    def test_validation(self):
        with pytest.raises(ValueError, match="exceed e"):
            scale_params(2.0, 0.1, inward_distance_coef=1.0)
        with pytest.raises(ValueError, match="theta"):
            scale_params(10.0, 1.5, inward_distance_coef=1.0)
        with pytest.raises(ValueError, match="positive"):
            scale_params(10.0, 0.1, inward_distance_coef=-1.0)


class TestHullSkeleton:
    def test_square_corners(self):
        sq = _square(10.0)
        skel = hull_skeleton(sq, 6.0, _euclid, side_count_coef=1.0)
        assert skel.m_plus_1 == 4
        assert np.array_equal(skel.points[0], skel.points[-1])
        assert sorted(map(tuple, skel.points[:-1])) == [
            (0.0, 0.0), (0.0, 10.0), (10.0, 0.0), (10.0, 10.0),
        ]

    def test_points_are_ordered_extreme_points(self, sampled_droplets):
        for rec in sampled_droplets[:10]:
            verts = rec.circuit.vertices
            td = tau_diameter(verts, _euclid)
            skel = hull_skeleton(verts, td / 4, _euclid, side_count_coef=1.0)
            hull = convex_hull(verts)
            hull_list = [tuple(p) for p in hull]
            positions = [hull_list.index(tuple(p)) for p in skel.points[:-1]]
            # Selected points appear in hull traversal order (cyclically).
            rotated = np.array(positions)
            shift = np.argmin(rotated)
            reordered = np.roll(rotated, -shift)
            assert (np.diff(reordered) > 0).all()

    def test_consecutive_spacing_at_least_s(self, sampled_droplets):
        for rec in sampled_droplets[:10]:
            verts = rec.circuit.vertices
            td = tau_diameter(verts, _euclid)
            s = td / 5
            skel = hull_skeleton(verts, s, _euclid, side_count_coef=1.0)
            gaps = np.linalg.norm(np.diff(skel.points, axis=0), axis=1)
            # All sides except possibly the closing one are >= s.
            assert (gaps[:-1] >= s - 1e-12).all()

    def test_circle_spacing(self):
        for radius in (50.0, 120.0):
            pts = _circle_points(radius, 4096)
            s = radius / 10
            skel = hull_skeleton(pts, s, _euclid, side_count_coef=1.0)
            expected = 2 * np.pi * radius / s
            assert 0.5 * expected <= skel.m_plus_1 <= 1.5 * expected

    def test_scale_too_coarse(self):
        sq = _square(10.0)
        with pytest.raises(ValueError, match="too coarse"):
            hull_skeleton(sq, 10.5, _euclid, side_count_coef=1.0)

    def test_degenerate_two_point_skeleton(self):
        # At the coarsest legal scale (s = diameter / 2) a thin shape keeps
        # only the start vertex and one far vertex: from (0, 0) the first
        # vertex at distance >= 5 is (7, -0.5), and from there every
        # remaining vertex is closer than 5.
        skel = hull_skeleton(_thin_hexagon(), 5.0, _euclid, side_count_coef=1.0)
        assert skel.m_plus_1 == 2

    def test_deterministic(self):
        sq = _square(10.0)
        a = hull_skeleton(sq, 6.0, _euclid, side_count_coef=1.0)
        b = hull_skeleton(sq, 6.0, _euclid, side_count_coef=1.0)
        assert np.array_equal(a.points, b.points)
        assert a.long_sides == b.long_sides

    def test_invalid_s(self):
        with pytest.raises(ValueError, match="positive"):
            hull_skeleton(_square(10.0), 0.0, _euclid, side_count_coef=1.0)


class TestLongSides:
    def test_all_sides_long(self):
        skel = hull_skeleton(_square(10.0), 6.0, _euclid, side_count_coef=1.0)
        # threshold = 8 * sqrt(pi) / 16 = 0.886 << 10.
        assert long_sides(skel) == frozenset({0, 1, 2, 3})
        assert skel.long_sides == long_sides(skel)
        assert long_side_length_sum(skel) == pytest.approx(40.0)

    def test_no_sides_long(self):
        # A tiny side_count_coef pushes the threshold above every side.
        skel = hull_skeleton(_square(10.0), 6.0, _euclid, side_count_coef=0.01)
        assert skel.long_sides == frozenset()
        assert long_side_length_sum(skel) == 0.0

    def test_threshold_boundary_inclusive(self):
        skel = hull_skeleton(_square(10.0), 6.0, _euclid, side_count_coef=1.0)
        coef_exact = skel.s * SQRT_PI / 16.0 / 10.0  # threshold == side length
        skel2 = hull_skeleton(
            _square(10.0), 6.0, _euclid, side_count_coef=coef_exact
        )
        assert skel2.long_sides == frozenset({0, 1, 2, 3})


def _annulus_membership_oracle(
    skel_points: np.ndarray, d: float, point: np.ndarray
) -> bool:
    """Literal halfplane recomputation, independent code path."""
    worst = -np.inf
    n = len(skel_points) - 1
    for i in range(n):
        a = skel_points[i]
        b = skel_points[i + 1]
        e = b - a
        length = math.hypot(e[0], e[1])
        outward = np.array([e[1] / length, -e[0] / length])
        signed = float(outward @ (point - a))
        worst = max(worst, signed)
    return worst <= d and worst >= -d


class TestAnnulus:
    @pytest.fixture()
    def square_skel(self):
        return hull_skeleton(_square(10.0), 6.0, _euclid, side_count_coef=1.0)

    def test_square_frame(self, square_skel):
        at = annulus_and_tubes(square_skel, 1.0)
        assert not at.contains(np.array([5.0, 5.0]))  # deep interior
        assert at.contains(np.array([0.0, 0.0]))  # vertex
        assert at.contains(np.array([5.0, 0.5]))  # inside frame
        assert at.contains(np.array([5.0, -0.5]))  # outside band
        assert not at.contains(np.array([5.0, -1.5]))
        assert not at.contains(np.array([11.2, 11.2]))  # mitre corner cut

    def test_membership_oracle(self, square_skel, sampled_droplets):
        rng = np.random.default_rng(7)
        cases = [(square_skel, 1.3)]
        for rec in sampled_droplets[:4]:
            verts = rec.circuit.vertices
            td = tau_diameter(verts, _euclid)
            skel = hull_skeleton(verts, td / 4, _euclid, side_count_coef=1.0)
            if skel.m_plus_1 >= 3:
                cases.append((skel, 0.8))
        for skel, d in cases:
            at = annulus_and_tubes(skel, d)
            lo = skel.points.min(axis=0) - 3
            hi = skel.points.max(axis=0) + 3
            pts = rng.uniform(lo, hi, size=(2000, 2))
            got = at.contains(pts)
            want = np.array(
                [_annulus_membership_oracle(skel.points, d, p) for p in pts]
            )
            assert np.array_equal(got, want)

    def test_distance_implies_membership(self, square_skel):
        # Points within Euclidean distance d of the polygon boundary are
        # always members (the halfplane representation is never tighter).
        rng = np.random.default_rng(8)
        at = annulus_and_tubes(square_skel, 1.0)
        theta = rng.uniform(0, 2 * np.pi, 500)
        # Points on the square boundary, nudged less than d.
        t = rng.uniform(0, 4, 500)
        side = np.floor(t).astype(int)
        frac = (t - side) * 10
        base = np.zeros((500, 2))
        base[side == 0] = np.stack(
            [frac[side == 0], np.zeros((side == 0).sum())], axis=1
        )
        base[side == 1] = np.stack(
            [np.full((side == 1).sum(), 10.0), frac[side == 1]], axis=1
        )
        base[side == 2] = np.stack(
            [10 - frac[side == 2], np.full((side == 2).sum(), 10.0)], axis=1
        )
        base[side == 3] = np.stack(
            [np.zeros((side == 3).sum()), 10 - frac[side == 3]], axis=1
        )
        r = rng.uniform(0, 0.99, 500)
        pts = base + r[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        assert at.contains(pts).all()

    def test_square_slab_ends(self, square_skel):
        at = annulus_and_tubes(square_skel, 1.0)
        assert at.slab_valid.all()
        # Bottom side (0,0)->(10,0): inner line y=1, neighbours' outer
        # lines x=-1 and x=11.
        ends = at.slab_ends[0]
        assert ends[0] == pytest.approx([-1.0, 1.0])
        assert ends[1] == pytest.approx([11.0, 1.0])

    def test_slab_condition(self, square_skel):
        # Tube points inside the slab progression range are all in the
        # annulus; just beyond the upper end the tube pokes out.
        at = annulus_and_tubes(square_skel, 1.0)
        rng = np.random.default_rng(9)
        for i in range(4):
            t = at.side_dirs[i]
            lo = float(at.slab_ends[i, 0] @ t)
            hi = float(at.slab_ends[i, 1] @ t)
            base = at.slab_ends[i, 0]
            n = at.normals[i]
            u = rng.uniform(0, hi - lo, 400)
            v = rng.uniform(0, 2 * at.d, 400)
            pts = base + u[:, None] * t[None, :] + v[:, None] * n[None, :]
            assert at.tube_contains(i, pts).all()
            assert at.contains(pts).all()
            beyond = base + (hi - lo + 0.05) * t + 2 * at.d * n
            assert at.tube_contains(i, beyond)
            assert not at.contains(beyond)

    def test_inner_region_empty_flag(self, square_skel):
        assert not annulus_and_tubes(square_skel, 1.0).inner_region_empty
        wide = annulus_and_tubes(square_skel, 6.0)
        assert wide.inner_region_empty
        # With an empty inner region the annulus covers the whole center.
        assert wide.contains(np.array([5.0, 5.0]))

    def test_validation(self, square_skel):
        with pytest.raises(ValueError, match="positive"):
            annulus_and_tubes(square_skel, 0.0)
        two_pt = hull_skeleton(_thin_hexagon(), 5.0, _euclid, side_count_coef=1.0)
        with pytest.raises(ValueError, match="at least 3"):
            annulus_and_tubes(two_pt, 1.0)
        with pytest.raises(ValueError, match="shape"):
            annulus_and_tubes(square_skel, 1.0, side_directions=np.ones((2, 2)))
        bad_dirs = -np.diff(square_skel.points, axis=0)
        with pytest.raises(ValueError, match="acute"):
            annulus_and_tubes(square_skel, 1.0, side_directions=bad_dirs)

    def test_tilted_side_directions(self, square_skel):
        # A mildly rotated progression direction still yields valid slabs
        # containing each side's middle portion.
        ang = 0.2
        rot = np.array(
            [[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]]
        )
        dirs = np.diff(square_skel.points, axis=0) @ rot.T
        at = annulus_and_tubes(square_skel, 1.0, side_directions=dirs)
        assert at.slab_valid.all()
        for i in range(4):
            mid = 0.5 * (square_skel.points[i] + square_skel.points[i + 1])
            t = at.side_dirs[i]
            lo = float(at.slab_ends[i, 0] @ t)
            hi = float(at.slab_ends[i, 1] @ t)
            assert lo < float(mid @ t) < hi


class TestConfinement:
    def test_skeleton_polygon_confined(self):
        sq = _square(10.0)
        skel = hull_skeleton(sq, 6.0, _euclid, side_count_coef=1.0)
        for d in (0.1, 1.0, 5.0):
            at = annulus_and_tubes(skel, d)
            assert circuit_confined(sq, at)

    def test_deep_notch_not_confined(self):
        # A U-notch reaching depth 3 into a 10-square.
        notched = np.array(
            [
                [0, 0], [10, 0], [10, 10], [6, 10], [6, 7], [5, 7],
                [5, 10], [0, 10], [0, 0],
            ],
            dtype=np.float64,
        )
        skel = hull_skeleton(notched, 6.0, _euclid, side_count_coef=1.0)
        at = annulus_and_tubes(skel, 1.0)
        assert not circuit_confined(notched, at)
        deep = annulus_and_tubes(skel, 3.5)
        assert circuit_confined(notched, deep)

    def test_mlr_bound_implies_confined(self, sampled_droplets):
        # If MLR + (hull-to-skeleton inward distance) <= d then every
        # circuit vertex is within d of the skeleton polygon, hence confined.
        checked = 0
        for rec in sampled_droplets[:15]:
            verts = rec.circuit.vertices
            td = tau_diameter(verts, _euclid)
            s = td / 4
            skel = hull_skeleton(verts, s, _euclid, side_count_coef=1.0)
            if skel.m_plus_1 < 3:
                continue
            stats = audit_properties(verts, s, _euclid)
            for d in (0.5, 1.0, 2.0, 4.0):
                if mlr(verts) + stats["inward_distance"] <= d:
                    at = annulus_and_tubes(skel, d)
                    assert circuit_confined(verts, at)
                    checked += 1
        assert checked > 0


class TestAuditProperties:
    def test_square_exact(self):
        stats = audit_properties(_square(10.0), 6.0, _euclid)
        assert stats["m_plus_1"] == 4
        assert stats["area_defect"] == 0.0
        assert stats["inward_distance"] == 0.0
        assert stats["energy_gap"] == pytest.approx(0.0, abs=1e-12)
        assert stats["side_count_ratio"] == pytest.approx(
            4 * 6.0 / math.sqrt(200)
        )

    def test_notch_defect(self):
        # 10-square with a 1x3 notch: the coarse skeleton is the full outer
        # square, and the notched interior lies entirely inside it, so the
        # outside-the-skeleton defect is zero.
        notched = np.array(
            [
                [0, 0], [10, 0], [10, 10], [6, 10], [6, 7], [5, 7],
                [5, 10], [0, 10], [0, 0],
            ],
            dtype=np.float64,
        )
        stats = audit_properties(notched, 6.0, _euclid)
        assert stats["area_defect"] == pytest.approx(0.0, abs=1e-9)
        assert stats["inward_distance"] == pytest.approx(0.0, abs=1e-9)

    def test_defect_against_sampling_oracle(self, sampled_droplets):
        rng = np.random.default_rng(11)
        from droplet_lab.circuits import interior_cells

        for rec in sampled_droplets[:5]:
            verts = rec.circuit.vertices
            td = tau_diameter(verts, _euclid)
            s = td / 2.5
            skel = hull_skeleton(verts, s, _euclid, side_count_coef=1.0)
            if skel.m_plus_1 < 3:
                continue
            stats = audit_properties(verts, s, _euclid)
            cells = {tuple(c) for c in interior_cells(verts)}
            n_mc = 40_000
            lo = verts.min(axis=0) - 1
            hi = verts.max(axis=0) + 1
            pts = rng.uniform(lo, hi, size=(n_mc, 2))
            # Site key (x, y) occupies [x-1, x] x [y-1, y] in walk coordinates.
            cell_idx = np.floor(pts).astype(np.int64) + 1
            in_interior = np.array(
                [tuple(c) in cells for c in cell_idx], dtype=bool
            )
            poly = skel.points
            normals = np.column_stack(
                [
                    np.diff(poly, axis=0)[:, 1],
                    -np.diff(poly, axis=0)[:, 0],
                ]
            )
            normals /= np.linalg.norm(normals, axis=1)[:, None]
            offs = np.einsum("ij,ij->i", normals, poly[:-1])
            in_poly = ((pts @ normals.T - offs) <= 0).all(axis=1)
            frac = (in_interior & ~in_poly).mean()
            box_area = float(np.prod(hi - lo))
            est = frac * box_area
            sigma = box_area * math.sqrt(max(frac * (1 - frac), 1e-12) / n_mc)
            assert abs(est - stats["area_defect"]) < 5 * sigma + 0.05

    def test_clip_area_matches_shoelace_for_convex(self):
        sq = _square(6.0)
        tri = np.array([[1, 1], [5, 1], [3, 5]], dtype=np.float64)
        assert convex_clip_area(sq, tri) == pytest.approx(8.0)
        assert convex_clip_area(
            np.vstack([tri, tri[:1]]), sq[:-1]
        ) == pytest.approx(8.0)


class TestPackagedConstants:
    def test_constants_load_and_are_positive(self):
        consts = load_skeleton_constants()
        for key in (
            "side_count_coef",
            "area_defect_coef",
            "inward_distance_coef",
            "boundary_energy_coef",
        ):
            assert consts[key] > 0
        assert consts["margin"] > 1.0
        maxima = consts["observed_maxima"]
        # Committed coefficients sit margin x above the observed corpus maxima.
        assert consts["side_count_coef"] == pytest.approx(
            consts["margin"] * maxima["side_count_ratio"]
        )
        assert consts["area_defect_coef"] == pytest.approx(
            consts["margin"] * maxima["area_defect_ratio"]
        )

    def test_corpus_loads_with_expected_membership(self):
        corpus = load_skeleton_corpus()
        members = corpus["members"]
        assert len(members) >= 1000
        for mem in members[:20]:
            assert mem["area"] >= corpus["min_area"]
            assert mem["l_eff"] == pytest.approx(math.sqrt(mem["area"]))
            assert mem["seed"] >= 0

    def test_default_coefficients_reach_functions(self):
        # Omitting the coefficients pulls them from the packaged calibration.
        s, d = scale_params(200.0)
        consts = load_skeleton_constants()
        s_explicit, _ = scale_params(
            200.0, inward_distance_coef=consts["inward_distance_coef"]
        )
        assert s == pytest.approx(s_explicit)
        skel = hull_skeleton(_square(10.0), 6.0, _euclid)
        assert skel.side_count_coef == pytest.approx(consts["side_count_coef"])
