import numpy as np
import pytest

from silvec.distfield import build_index, build_segment_index
from silvec.geometry import ClosedCurve

from conftest import brute_distance, circle_points, square_points


@pytest.fixture(scope="module")
def circle_index(circle_curve):
    return build_index(circle_curve)


class TestDistance:
    def test_zero_on_curve_samples(self, circle_curve, circle_index):
        for i in (0, 57, 911):
            assert circle_index.distance(circle_curve.samples[i]) == 0.0

    def test_circle_center(self, circle_curve, circle_index):
        spacing = circle_curve.total_length / len(circle_curve.samples)
        d = circle_index.distance(np.array([512.0, 512.0]))
        assert d == pytest.approx(300.0, abs=2 * spacing)

    def test_matches_brute_force_random(self, circle_curve, circle_index):
        rng = np.random.default_rng(17)
        pts = rng.uniform(0, 1024, size=(1000, 2))
        got = circle_index.distances(pts)
        for p, g in zip(pts, got):
            assert abs(g - brute_distance(circle_curve.samples, p)) < 1e-9

    def test_outside_bounding_box(self, circle_curve, circle_index):
        for p in ([-200.0, 512.0], [512.0, 2000.0], [-300.0, -300.0]):
            expect = brute_distance(circle_curve.samples, np.asarray(p))
            assert circle_index.distance(p) == pytest.approx(expect, abs=1e-9)

    def test_degenerate_triangle(self):
        c = ClosedCurve.from_points([[0, 0], [4, 0], [0, 3]])
        idx = build_index(c)
        assert idx.distance([0.0, 0.0]) == 0.0
        assert idx.distance([10.0, 0.0]) == pytest.approx(6.0)

    def test_lipschitz(self, circle_curve, circle_index):
        rng = np.random.default_rng(23)
        p = rng.uniform(100, 900, size=(200, 2))
        q = p + rng.normal(scale=5.0, size=(200, 2))
        dp = circle_index.distances(p)
        dq = circle_index.distances(q)
        gap = np.hypot(*(p - q).T)
        assert np.all(np.abs(dp - dq) <= gap + 1e-9)

    def test_far_fallback_hook(self, circle_curve, circle_index):
        pts = np.array([[815.0, 512.0], [-500.0, -500.0]])
        vals = circle_index.distances(pts, far_fallback=lambda q: np.full(
            q.shape[0], -1.0))
        assert vals[0] == pytest.approx(3.0, abs=1.0)  # near: exact branch
        assert vals[1] == -1.0  # the sentinel marks the far branch


class TestNearest:
    def test_on_curve_point(self, circle_curve, circle_index):
        t0 = float(circle_curve.cum_length[123])
        p = circle_curve.samples[123]
        pt, t, d = circle_index.nearest(p)
        assert d == 0.0
        assert t == pytest.approx(t0, abs=1e-9)
        assert np.allclose(pt, p)

    def test_tie_break_smallest_parameter(self):
        square = ClosedCurve.from_points(square_points(100.0, (50.0, 50.0)))
        idx = build_index(square)
        # the center is equidistant from all four edges
        _, t, d = idx.nearest([50.0, 50.0])
        assert d == pytest.approx(50.0)
        candidates = [idx.tstart[i] + u * idx.elen[i]
                      for i in range(len(idx.elen))
                      for u in (0.0, 0.5, 1.0)]
        assert t <= min(c for c in candidates if c > 0) + 50.0
        # the smallest-parameter witness lies on the first edge
        assert t == pytest.approx(50.0, abs=1.0)

    def test_matches_brute_force(self, circle_curve, circle_index):
        rng = np.random.default_rng(29)
        for p in rng.uniform(0, 1024, size=(200, 2)):
            _, _, d = circle_index.nearest(p)
            assert abs(d - brute_distance(circle_curve.samples, p)) < 1e-9


class TestGradient:
    def test_north_of_horizontal_line(self):
        from conftest import rect_points
        c = ClosedCurve.from_points(rect_points(200, 80, (0.0, 0.0)))
        idx = build_index(c)
        g = idx.distance_gradient([100.0, -5.0])
        assert np.allclose(g, [0.0, -1.0], atol=1e-9)

    def test_zero_on_curve(self, circle_curve, circle_index):
        g = circle_index.distance_gradient(circle_curve.samples[10])
        assert np.all(g == 0.0)

    def test_unit_norm(self, circle_curve, circle_index):
        rng = np.random.default_rng(31)
        for p in rng.uniform(100, 900, size=(100, 2)):
            g = circle_index.distance_gradient(p)
            n = np.hypot(*g)
            if n > 0:
                assert n == pytest.approx(1.0, abs=1e-12)

    def test_matches_finite_differences(self, circle_curve, circle_index):
        rng = np.random.default_rng(37)
        checked = 0
        for p in rng.uniform(150, 874, size=(200, 2)):
            d = circle_index.distance(p)
            # stay away from the center (medial axis) and the curve itself
            r = np.hypot(*(p - np.array([512.0, 512.0])))
            if r < 30.0 or d < 1.0:
                continue
            h = 1e-5
            fd = np.array([
                (circle_index.distance(p + [h, 0])
                 - circle_index.distance(p - [h, 0])) / (2 * h),
                (circle_index.distance(p + [0, h])
                 - circle_index.distance(p - [0, h])) / (2 * h)])
            g = circle_index.distance_gradient(p)
            assert np.allclose(g, fd, atol=1e-4)
            checked += 1
        assert checked > 50


class TestSegmentIndex:
    def test_open_polylines(self):
        idx = build_segment_index([np.array([[0.0, 0.0], [10.0, 0.0]]),
                                   np.array([[0.0, 5.0], [10.0, 5.0]])])
        assert idx.distance([5.0, 1.0]) == pytest.approx(1.0)
        assert idx.distance([5.0, 4.0]) == pytest.approx(1.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            build_segment_index([np.zeros((1, 2))])
