"""Bidirectional distance metrics between a chain and its source curve.

``dist_chain_to_curve`` averages the curve distance over the chain,
weighted by the Bezier length element (the same quadrature as the
refinement energy, so with zero length penalty the two agree up to the
total Bezier length factor).  ``dist_curve_to_chain`` averages, over the
curve samples, the distance to the union of sections; the sections are
flattened to polylines within a small chord tolerance and indexed by the
same spatial grid used for curve distances.  Checking both directions
matters: a chain can hug the curve closely while covering only part of
it, which only the curve-to-chain average exposes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distfield import CurveIndex, build_index, build_segment_index
from .geometry import BezierChain, ClosedCurve, control_points
from .refine import _midpoint_basis, quadrature_count

FLATTEN_TOL = 0.05  # px chord error when flattening sections to polylines


def dist_chain_to_curve(index: CurveIndex, chain: BezierChain) -> float:
    """Length-weighted average curve distance over the chain."""
    num = 0.0
    den = 0.0
    for _, seg, start, end in chain.sections():
        q = quadrature_count(seg.length)
        basis, dbasis = _midpoint_basis(q)
        cps = control_points(seg, start, end)
        pts = basis @ cps
        der = dbasis @ np.diff(cps, axis=0)
        speed = np.hypot(der[:, 0], der[:, 1])
        dist = index.distances(pts)
        num += float((dist * speed).sum()) / q
        den += float(speed.sum()) / q
    if den == 0.0:
        return 0.0
    return num / den


def _flatten_cubic(cps: np.ndarray, tol: float, depth: int = 0, out=None):
    if out is None:
        out = [cps[0]]
    chord = cps[3] - cps[0]
    clen = np.hypot(*chord)
    if clen < 1e-12:
        flat = (np.hypot(*(cps[1] - cps[0])) <= tol
                and np.hypot(*(cps[2] - cps[3])) <= tol)
    else:
        nx, ny = chord / clen
        v1 = cps[1] - cps[0]
        v2 = cps[2] - cps[0]
        d1 = abs(nx * v1[1] - ny * v1[0])
        d2 = abs(nx * v2[1] - ny * v2[0])
        flat = max(d1, d2) <= tol
    if flat or depth >= 24:
        out.append(cps[3])
        return out
    left, right = _split_cubic(cps)
    _flatten_cubic(left, tol, depth + 1, out)
    _flatten_cubic(right, tol, depth + 1, out)
    return out


def _split_cubic(cps: np.ndarray):
    m01 = 0.5 * (cps[0] + cps[1])
    m12 = 0.5 * (cps[1] + cps[2])
    m23 = 0.5 * (cps[2] + cps[3])
    m012 = 0.5 * (m01 + m12)
    m123 = 0.5 * (m12 + m23)
    mid = 0.5 * (m012 + m123)
    return (np.array([cps[0], m01, m012, mid]),
            np.array([mid, m123, m23, cps[3]]))


def flatten_chain(chain: BezierChain, tol: float = FLATTEN_TOL):
    """Polyline approximations of every section, within ``tol`` px."""
    return [np.asarray(_flatten_cubic(control_points(seg, start, end), tol))
            for _, seg, start, end in chain.sections()]


def chain_index(chain: BezierChain, tol: float = FLATTEN_TOL,
                cell: float = 8.0) -> CurveIndex:
    """Distance index over the flattened sections of a chain."""
    return build_segment_index(flatten_chain(chain, tol), cell=cell)


def dist_curve_to_chain(curve: ClosedCurve, chain: BezierChain,
                        tol: float = FLATTEN_TOL) -> float:
    """Arc-length-weighted average chain distance over the curve samples."""
    idx = chain_index(chain, tol)
    dist = idx.distances(curve.samples)
    edges = np.hypot(*(np.roll(curve.samples, -1, axis=0)
                       - curve.samples).T)
    weights = 0.5 * (edges + np.roll(edges, 1))
    return float((dist * weights).sum() / weights.sum())


def variation_percent(before: float, after: float) -> Optional[float]:
    """Relative change in percent, or None when the reference is zero."""
    if before == 0.0:
        return None
    return 100.0 * (after - before) / before


@dataclass(frozen=True)
class MetricsReport:
    """Distances for a chain, optionally against a pre-refinement chain."""

    nodes: int
    d_b_to_c: float
    d_c_to_b: float
    d_b_to_c_before: Optional[float] = None
    d_c_to_b_before: Optional[float] = None
    variation_pct_b_to_c: Optional[float] = None
    variation_pct_c_to_b: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "nodes": self.nodes,
            "d_B_to_C": self.d_b_to_c,
            "d_C_to_B": self.d_c_to_b,
        }
        if self.d_b_to_c_before is not None:
            out["d_B_to_C_before"] = self.d_b_to_c_before
            out["d_C_to_B_before"] = self.d_c_to_b_before
            out["variation_pct_B_to_C"] = self.variation_pct_b_to_c
            out["variation_pct_C_to_B"] = self.variation_pct_c_to_b
        return out


def format_table(report: MetricsReport) -> str:
    """Aligned-column rendering of a report, one header and one data row."""
    def fmt(v):
        if v is None:
            return "n/a"
        if isinstance(v, int):
            return str(v)
        return f"{v:.2f}"

    if report.d_b_to_c_before is None:
        headers = ["Nodes", "d(B,C)", "d(C,B)"]
        values = [report.nodes, report.d_b_to_c, report.d_c_to_b]
    else:
        headers = ["Nodes", "d(B0,C)", "d(Binf,C)", "Var. Perc.",
                   "d(C,B0)", "d(C,Binf)", "Var. Perc."]
        var1 = (None if report.variation_pct_b_to_c is None
                else f"{report.variation_pct_b_to_c:+.2f}%")
        var2 = (None if report.variation_pct_c_to_b is None
                else f"{report.variation_pct_c_to_b:+.2f}%")
        values = [report.nodes, report.d_b_to_c_before, report.d_b_to_c,
                  var1, report.d_c_to_b_before, report.d_c_to_b, var2]
    cells = [v if isinstance(v, str) else fmt(v) for v in values]
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return head + "\n" + row


def single_report(curve: ClosedCurve, chain: BezierChain,
                  index: CurveIndex | None = None) -> MetricsReport:
    """Both distance metrics for one chain."""
    if index is None:
        index = build_index(curve)
    return MetricsReport(
        nodes=len(chain.nodes),
        d_b_to_c=dist_chain_to_curve(index, chain),
        d_c_to_b=dist_curve_to_chain(curve, chain),
    )


def compare(curve: ClosedCurve, chain_before: BezierChain,
            chain_after: BezierChain,
            index: CurveIndex | None = None) -> MetricsReport:
    """Both metrics for both chains plus the variation percentages."""
    if index is None:
        index = build_index(curve)
    b_before = dist_chain_to_curve(index, chain_before)
    b_after = dist_chain_to_curve(index, chain_after)
    c_before = dist_curve_to_chain(curve, chain_before)
    c_after = dist_curve_to_chain(curve, chain_after)
    return MetricsReport(
        nodes=len(chain_after.nodes),
        d_b_to_c=b_after,
        d_c_to_b=c_after,
        d_b_to_c_before=b_before,
        d_c_to_b_before=c_before,
        variation_pct_b_to_c=variation_percent(b_before, b_after),
        variation_pct_c_to_b=variation_percent(c_before, c_after),
    )
