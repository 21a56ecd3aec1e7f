"""Planar closed curves, nodes, and tangent-frame cubic Bezier sections.

All coordinates are in pixels.  A closed curve is a dense polyline with
cumulative arc length; the curve parameter t is arc length along the
polyline, taken modulo the total length, so an interval [t, t2] with
t2 < t wraps through the closing point.

A Bezier section between two nodes is stored as four dimensionless
parameters (lam, gamma, beta, delta) expressed in the local tangent
frames of its end nodes, plus the arc length of the source curve between
them.  The standard Bernstein control points are recovered with
``control_points`` and the inverse mapping is ``from_control_points``.
Keeping the tangent frame explicit makes it trivial to pin the tangent
direction at regular nodes: their gamma/delta components are zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterator

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return (angle + math.pi) % TWO_PI - math.pi


def tangent_frame(alpha: float):
    """Unit tangent (cos a, sin a) and its +90 degree rotation."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([c, s]), np.array([-s, c])


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Closed polyline parameterized by arc length in [0, T).

    ``samples[i]`` connects to ``samples[i + 1]`` and the last sample
    connects back to ``samples[0]``.  ``cum_length[i]`` is the arc length
    from the first sample to sample i; ``total_length`` includes the
    closing edge.  Instances are immutable and safe to share.
    """

    samples: np.ndarray       # (M, 2)
    cum_length: np.ndarray    # (M,), cum_length[0] == 0
    total_length: float

    @classmethod
    def from_points(cls, points) -> "ClosedCurve":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected an (M, 2) array of sample points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("curve samples must be finite")
        if pts.shape[0] >= 2 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]  # tolerate an explicitly repeated closing point
        if pts.shape[0] < 3:
            raise ValueError("a closed curve needs at least 3 samples")
        edge_vec = np.roll(pts, -1, axis=0) - pts
        edge_len = np.hypot(edge_vec[:, 0], edge_vec[:, 1])
        if np.any(edge_len == 0.0):
            raise ValueError("consecutive curve samples must be distinct")
        cum = np.concatenate([[0.0], np.cumsum(edge_len[:-1])])
        return cls(
            samples=_readonly(pts),
            cum_length=_readonly(cum),
            total_length=float(edge_len.sum()),
        )

    @cached_property
    def _knots(self) -> np.ndarray:
        return np.concatenate([self.cum_length, [self.total_length]])

    @cached_property
    def _closed_samples(self) -> np.ndarray:
        return np.vstack([self.samples, self.samples[:1]])

    def point_at(self, t):
        """Position on the polyline at arc length t (taken mod T).

        Accepts a scalar or an array of parameters and returns (2,) or
        (..., 2) accordingly.
        """
        tm = np.mod(t, self.total_length)
        x = np.interp(tm, self._knots, self._closed_samples[:, 0])
        y = np.interp(tm, self._knots, self._closed_samples[:, 1])
        if np.ndim(t) == 0:
            return np.array([float(x), float(y)])
        return np.stack([x, y], axis=-1)

    def length_between(self, t: float, t2: float) -> float:
        """Arc length traveled forward from t to t2, wrapping through T."""
        return float(np.mod(t2 - t, self.total_length))

    @cached_property
    def _unit_grid(self):
        # Equally respaced samples (about 1 px apart) shared by every
        # smoothed-tangent query on this curve.
        n = max(16, int(round(self.total_length)))
        ts = np.arange(n) * (self.total_length / n)
        return ts, self.point_at(ts)

    def smoothed_tangent_angle(self, t: float, sigma: float) -> float:
        """Direction angle of the Gaussian-smoothed curve derivative at t.

        The smoothing is a periodic convolution over arc length with
        standard deviation sigma; the kernel is truncated at 4 sigma.
        """
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        ts, pts = self._unit_grid
        half = 0.5 * self.total_length
        delta = np.mod(t - ts + half, self.total_length) - half
        mask = np.abs(delta) <= 4.0 * sigma
        d = delta[mask]
        # derivative-of-Gaussian weights; scale factors drop out of atan2
        w = -d * np.exp(-0.5 * (d / sigma) ** 2)
        v = w @ pts[mask]
        return wrap_angle(math.atan2(v[1], v[0]))


class NodeKind(enum.Enum):
    CORNER = "corner"
    REGULAR = "regular"


@dataclass(frozen=True, eq=False)
class Node:
    """Bezier section end point: curve parameter, position, tangent, kind.

    At a regular node both incident sections must leave along the tangent
    direction ``alpha``; at a corner the incident tangents are free and
    ``alpha`` merely fixes a (irrelevant) reference frame.
    """

    t: float
    position: np.ndarray
    alpha: float
    kind: NodeKind

    @classmethod
    def on_curve(cls, curve: ClosedCurve, t: float, alpha: float,
                 kind: NodeKind) -> "Node":
        t = float(np.mod(t, curve.total_length))
        return cls(t=t, position=_readonly(curve.point_at(t)),
                   alpha=wrap_angle(alpha), kind=kind)


@dataclass(frozen=True, eq=False)
class BezierSegment:
    """Cubic section parameters in the tangent frames of its two nodes.

    The departing control point sits at ``length * (lam, gamma)`` in the
    start node frame and the arriving one at ``length * (beta, delta)``
    behind the end node frame; ``length`` is the arc length of the source
    curve between the two nodes.
    """

    lam: float
    gamma: float
    beta: float
    delta: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("section length must be positive")

    def params(self) -> np.ndarray:
        return np.array([self.lam, self.gamma, self.beta, self.delta])

    def with_params(self, params) -> "BezierSegment":
        lam, gamma, beta, delta = (float(v) for v in params)
        return replace(self, lam=lam, gamma=gamma, beta=beta, delta=delta)


def control_points(seg: BezierSegment, start: Node, end: Node) -> np.ndarray:
    """Standard Bernstein control points of a section, as a (4, 2) array."""
    t0, n0 = tangent_frame(start.alpha)
    t1, n1 = tangent_frame(end.alpha)
    cp = np.empty((4, 2))
    cp[0] = start.position
    cp[1] = start.position + seg.length * (seg.lam * t0 + seg.gamma * n0)
    cp[2] = end.position - seg.length * (seg.beta * t1 + seg.delta * n1)
    cp[3] = end.position
    return cp


def from_control_points(p0, p1, p2, p3, alpha: float, alpha_end: float,
                        length: float):
    """Recover (lam, gamma, beta, delta) from Bernstein control points."""
    if not length > 0:
        raise ValueError("length must be positive")
    t0, n0 = tangent_frame(alpha)
    t1, n1 = tangent_frame(alpha_end)
    d0 = (np.asarray(p1, float) - np.asarray(p0, float)) / length
    d1 = (np.asarray(p3, float) - np.asarray(p2, float)) / length
    return float(d0 @ t0), float(d0 @ n0), float(d1 @ t1), float(d1 @ n1)


def bernstein(u):
    """Cubic Bernstein basis values at u, stacked on the last axis."""
    u = np.asarray(u, dtype=float)
    v = 1.0 - u
    return np.stack([v**3, 3.0 * v**2 * u, 3.0 * v * u**2, u**3], axis=-1)


def bernstein_deriv(u):
    """Basis of dB/du against the control point differences (P1-P0, ...)."""
    u = np.asarray(u, dtype=float)
    v = 1.0 - u
    return np.stack([3.0 * v**2, 6.0 * v * u, 3.0 * u**2], axis=-1)


def eval_bezier(seg: BezierSegment, start: Node, end: Node, s):
    """Point of the section at arc parameter s in [0, length]."""
    L = seg.length
    s_arr = np.asarray(s, dtype=float)
    tol = 1e-9 * max(1.0, L)
    if np.any(s_arr < -tol) or np.any(s_arr > L + tol):
        raise ValueError(f"parameter outside [0, {L}]")
    u = np.clip(s_arr / L, 0.0, 1.0)
    pts = bernstein(u) @ control_points(seg, start, end)
    return pts


def bezier_derivative(seg: BezierSegment, start: Node, end: Node, s):
    """dB/ds of the section at arc parameter s (exact cubic derivative)."""
    L = seg.length
    u = np.clip(np.asarray(s, dtype=float) / L, 0.0, 1.0)
    cp = control_points(seg, start, end)
    return (bernstein_deriv(u) @ np.diff(cp, axis=0)) / L


@dataclass(frozen=True, eq=False)
class BezierChain:
    """Cyclic vectorization: N nodes and N sections, section n joining
    node n to node (n + 1) mod N."""

    nodes: tuple
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "segments", tuple(self.segments))
        n = len(self.nodes)
        if n == 0 or n != len(self.segments):
            raise ValueError("a chain needs as many sections as nodes")
        if n >= 2:
            ts = [nd.t for nd in self.nodes]
            drops = sum(1 for i in range(n) if ts[(i + 1) % n] <= ts[i])
            if drops != 1:
                raise ValueError(
                    "node parameters must be strictly increasing cyclically")
        for i, nd in enumerate(self.nodes):
            if nd.kind is NodeKind.REGULAR:
                if self.segments[i].gamma != 0.0 or self.segments[i - 1].delta != 0.0:
                    raise ValueError(
                        "regular node requires gamma = 0 and delta = 0 in "
                        "its adjacent sections")

    def __len__(self) -> int:
        return len(self.nodes)

    def sections(self) -> Iterator[tuple]:
        """Yield (i, segment, start node, end node) for every section."""
        n = len(self.nodes)
        for i in range(n):
            yield i, self.segments[i], self.nodes[i], self.nodes[(i + 1) % n]

    def replace_node(self, i: int, node: Node, seg_before: BezierSegment,
                     seg_after: BezierSegment) -> "BezierChain":
        """New chain with node i and its two incident sections swapped out."""
        n = len(self.nodes)
        nodes = list(self.nodes)
        segments = list(self.segments)
        nodes[i] = node
        segments[(i - 1) % n] = seg_before
        segments[i] = seg_after
        return BezierChain(tuple(nodes), tuple(segments))


def node_gaps(curve: ClosedCurve, ts) -> list:
    """Cyclic arc-length gaps between consecutive node parameters.

    A single node spans the whole curve, so its gap is the total length
    rather than the zero returned by ``length_between(t, t)``.
    """
    ts = list(ts)
    if len(ts) == 1:
        return [curve.total_length]
    return [curve.length_between(ts[i], ts[(i + 1) % len(ts)])
            for i in range(len(ts))]
