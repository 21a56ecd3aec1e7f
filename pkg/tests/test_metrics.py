import numpy as np
import pytest

from silvec.curvature import vectorize
from silvec.distfield import build_index
from silvec.fitting import fit_chain
from silvec.geometry import (BezierChain, BezierSegment, ClosedCurve, Node,
                             NodeKind, control_points)
from silvec.metrics import (MetricsReport, chain_index, compare,
                            dist_chain_to_curve, dist_curve_to_chain,
                            flatten_chain, format_table, single_report,
                            variation_percent)
from silvec.refine import quadrature_count, total_energy, RefineParams

from conftest import circle_points, square_points


def square_chain(side, center, kind=NodeKind.CORNER):
    """Chain of four straight sections along an axis-aligned square."""
    from silvec.geometry import from_control_points
    half = side / 2.0
    cx, cy = center
    corners = np.array([[cx - half, cy - half], [cx + half, cy - half],
                        [cx + half, cy + half], [cx - half, cy + half]])
    alphas = [0.0, np.pi / 2.0, np.pi, -np.pi / 2.0]
    nodes = tuple(Node(t=float(i * side), position=corners[i],
                       alpha=alphas[i], kind=kind) for i in range(4))
    segments = []
    for i in range(4):
        p0 = corners[i]
        p3 = corners[(i + 1) % 4]
        params = from_control_points(p0, p0 + (p3 - p0) / 3.0,
                                     p0 + 2.0 * (p3 - p0) / 3.0, p3,
                                     alphas[i], alphas[(i + 1) % 4], side)
        segments.append(BezierSegment(*params, side))
    return BezierChain(nodes, tuple(segments))


@pytest.fixture(scope="module")
def square_setup(square_curve):
    return square_curve, build_index(square_curve)


class TestChainToCurve:
    def test_chain_on_curve_is_tiny(self, square_setup):
        curve, index = square_setup
        chain = square_chain(400.0, (512.0, 512.0))
        assert dist_chain_to_curve(index, chain) < 1e-3

    def test_offset_square_chain_is_about_one(self, square_setup):
        curve, index = square_setup
        chain = square_chain(402.0, (512.0, 512.0))
        d = dist_chain_to_curve(index, chain)
        # reference value from a tenfold-denser rule; the corner bands
        # contribute the deviation above the 1 px face offset
        num = den = 0.0
        for _, seg, start, end in chain.sections():
            q = 10 * quadrature_count(seg.length)
            u = (np.arange(q) + 0.5) / q
            cps = control_points(seg, start, end)
            pts = cps[0] + u[:, None] * (cps[3] - cps[0])
            dist = index.distances(pts)
            num += dist.sum() * seg.length / q
            den += seg.length
        expected = num / den
        assert d == pytest.approx(expected, rel=2e-3)
        assert expected == pytest.approx(1.0, abs=0.05)
        assert d == pytest.approx(1.0, abs=0.05)

    def test_matches_energy_over_length(self, square_setup):
        curve, index = square_setup
        chain = square_chain(402.0, (512.0, 512.0))
        energy = total_energy(index, chain, RefineParams(w_default=0.0))
        length = sum(seg.length for seg in chain.segments)  # straight
        assert dist_chain_to_curve(index, chain) == pytest.approx(
            energy / length, rel=1e-9)


class TestCurveToChain:
    def test_chain_on_curve_is_tiny(self, square_setup):
        curve, index = square_setup
        chain = square_chain(400.0, (512.0, 512.0))
        assert dist_curve_to_chain(curve, chain) < 1e-2

    def test_half_coverage_blows_up_one_direction(self):
        from silvec.fitting import linear_fit
        from silvec.geometry import from_control_points
        curve = ClosedCurve.from_points(circle_points(150.0, (300.0, 300.0)))
        index = build_index(curve)
        big_t = curve.total_length
        half = big_t / 2.0
        a0 = curve.smoothed_tangent_angle(0.0, 10.0)
        a1 = curve.smoothed_tangent_angle(half, 10.0)
        n0 = Node.on_curve(curve, 0.0, a0, NodeKind.CORNER)
        n1 = Node.on_curve(curve, half, a1, NodeKind.CORNER)
        fwd = linear_fit(curve, index, 0.0, half, a0, a1)
        # the return section retraces the same half backwards, so the
        # chain hugs half the circle and never visits the other half
        cps = control_points(fwd, n0, n1)[::-1]
        back = BezierSegment(*from_control_points(
            cps[0], cps[1], cps[2], cps[3], a1, a0, half), half)
        chain = BezierChain((n0, n1), (fwd, back))
        d_b_to_c = dist_chain_to_curve(index, chain)
        d_c_to_b = dist_curve_to_chain(curve, chain)
        assert d_c_to_b > 5.0 * d_b_to_c

    def test_translation_invariance(self):
        for shift in ([0.0, 0.0], [137.25, -41.5]):
            pts = circle_points(120.0, (400.0 + shift[0], 400.0 + shift[1]))
            curve = ClosedCurve.from_points(pts)
            index = build_index(curve)
            chain = vectorize(curve, index=index).chain
            b = dist_chain_to_curve(index, chain)
            c = dist_curve_to_chain(curve, chain)
            if shift == [0.0, 0.0]:
                base = (b, c)
            else:
                assert b == pytest.approx(base[0], rel=1e-6)
                assert c == pytest.approx(base[1], rel=1e-6)

    def test_flatten_tolerance(self):
        from silvec.geometry import bernstein
        curve = ClosedCurve.from_points(circle_points(150.0, (300.0, 300.0)))
        index = build_index(curve)
        chain = vectorize(curve, index=index).chain
        for poly, (_, seg, start, end) in zip(flatten_chain(chain, 0.05),
                                              chain.sections()):
            u = np.linspace(0, 1, 8000)
            dense = bernstein(u) @ control_points(seg, start, end)
            # edge midpoints carry the largest chord error
            mids = 0.5 * (poly[:-1] + poly[1:])
            for m in mids[:: max(1, len(mids) // 25)]:
                gap = np.hypot(*(dense - m).T).min()
                assert gap < 0.05 + 0.05  # tolerance plus sampling slack


class TestVariation:
    def test_paper_style_ratio(self):
        assert variation_percent(1.48, 0.68) == pytest.approx(-54.054,
                                                              abs=0.01)

    def test_zero_reference(self):
        assert variation_percent(0.0, 1.0) is None

    def test_sign_convention(self):
        assert variation_percent(1.0, 1.5) == pytest.approx(50.0)


class TestCompare:
    def test_identical_chains_zero_variation(self, square_setup):
        curve, index = square_setup
        chain = square_chain(402.0, (512.0, 512.0))
        report = compare(curve, chain, chain, index=index)
        assert report.variation_pct_b_to_c == pytest.approx(0.0, abs=1e-9)
        assert report.variation_pct_c_to_b == pytest.approx(0.0, abs=1e-9)

    def test_worse_after_is_positive(self, square_setup):
        curve, index = square_setup
        good = square_chain(400.0, (512.0, 512.0))
        bad = square_chain(406.0, (512.0, 512.0))
        report = compare(curve, good, bad, index=index)
        assert report.variation_pct_b_to_c > 0

    def test_report_serialization(self, square_setup):
        curve, index = square_setup
        good = square_chain(400.0, (512.0, 512.0))
        bad = square_chain(406.0, (512.0, 512.0))
        report = compare(curve, bad, good, index=index)
        d = report.to_dict()
        for key in ("nodes", "d_B_to_C", "d_C_to_B", "d_B_to_C_before",
                    "variation_pct_B_to_C", "variation_pct_C_to_B"):
            assert key in d
        table = format_table(report)
        assert "Var. Perc." in table and "d(B0,C)" in table

    def test_single_report_has_no_variation(self, square_setup):
        curve, index = square_setup
        chain = square_chain(400.0, (512.0, 512.0))
        report = single_report(curve, chain, index=index)
        assert report.variation_pct_b_to_c is None
        assert "variation_pct_B_to_C" not in report.to_dict()


class TestQuadratureStability:
    def test_doubling_density_changes_little(self):
        curve = ClosedCurve.from_points(circle_points(150.0, (300.0, 300.0)))
        index = build_index(curve)
        chain = vectorize(curve, index=index).chain
        base = dist_chain_to_curve(index, chain)
        num = den = 0.0
        for _, seg, start, end in chain.sections():
            q = 2 * quadrature_count(seg.length)
            u = (np.arange(q) + 0.5) / q
            from silvec.geometry import bernstein, bernstein_deriv
            cps = control_points(seg, start, end)
            pts = bernstein(u) @ cps
            der = bernstein_deriv(u) @ np.diff(cps, axis=0)
            speed = np.hypot(der[:, 0], der[:, 1])
            dist = index.distances(pts)
            num += float((dist * speed).sum()) / q
            den += float(speed.sum()) / q
        doubled = num / den
        assert abs(doubled - base) / max(base, 1e-12) < 0.01
