"""SVG path import and export for Bezier chains.

The importer reads the path subset produced by common vector editors:
M/m, L/l, H/h, V/v, C/c, S/s, Q/q, T/t and Z/z, with group and path
transform attributes applied.  Lines and quadratics are degree-elevated
to exact cubics; elliptical arcs have no exact cubic form and are
rejected with an explicit error.  Every closed subpath becomes one
RawPath of control point quadruples.

``import_chain`` projects the quadruple end points onto an extracted
boundary curve, aligns the traversal direction with the curve
orientation, drops end points that project out of cyclic order (their
sections are merged and refit against the curve) and treats every
surviving end point as a corner, since external files carry no
corner/regular distinction.

The writer emits one absolute ``M ... C ... Z`` path per chain with
exactly three decimals per coordinate, so identical chains always
produce identical bytes.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .distfield import CurveIndex
from .fitting import FitError, linear_fit
from .geometry import (BezierChain, BezierSegment, ClosedCurve, Node,
                       NodeKind, control_points, from_control_points,
                       node_gaps)


class SvgParseError(ValueError):
    """Malformed SVG document or path data."""


class SvgUnsupportedCommandError(SvgParseError):
    """Path command outside the supported subset (e.g. arcs)."""

    def __init__(self, command: str):
        super().__init__(f"unsupported path command {command!r}"
                         " (elliptical arcs have no exact cubic form)")
        self.command = command


class SvgTopologyError(SvgParseError):
    """Subpath not closed, or too few usable nodes after import."""


class SvgImportError(ValueError):
    """End point could not be matched to the boundary curve."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True, eq=False)
class RawPath:
    """One closed subpath as an (K, 4, 2) array of cubic control points,
    consecutive quadruples sharing end points."""

    quads: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quads, dtype=float)
        if q.ndim != 3 or q.shape[1:] != (4, 2) or q.shape[0] < 1:
            raise ValueError("expected a (K, 4, 2) array with K >= 1")
        if np.hypot(*(q[-1, 3] - q[0, 0])) > 1e-6:
            raise SvgTopologyError("subpath is not closed")
        q.setflags(write=False)
        object.__setattr__(self, "quads", q)


_NUMBER = re.compile(
    r"[MmLlHhVvCcSsQqTtZzAa]|[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_TRANSFORM = re.compile(r"(matrix|translate|scale|rotate|skewX|skewY)"
                        r"\s*\(([^)]*)\)")


def _parse_transform(text: str | None) -> np.ndarray:
    m = np.eye(3)
    if not text:
        return m
    for name, args in _TRANSFORM.findall(text):
        vals = [float(v) for v in re.split(r"[\s,]+", args.strip()) if v]
        t = np.eye(3)
        if name == "matrix" and len(vals) == 6:
            a, b, c, d, e, f = vals
            t[:2] = [[a, c, e], [b, d, f]]
        elif name == "translate":
            t[0, 2] = vals[0]
            t[1, 2] = vals[1] if len(vals) > 1 else 0.0
        elif name == "scale":
            t[0, 0] = vals[0]
            t[1, 1] = vals[1] if len(vals) > 1 else vals[0]
        elif name == "rotate":
            ang = math.radians(vals[0])
            rot = np.eye(3)
            rot[:2, :2] = [[math.cos(ang), -math.sin(ang)],
                           [math.sin(ang), math.cos(ang)]]
            if len(vals) == 3:
                cx, cy = vals[1], vals[2]
                pre = np.eye(3)
                pre[:2, 2] = [cx, cy]
                post = np.eye(3)
                post[:2, 2] = [-cx, -cy]
                rot = pre @ rot @ post
            t = rot
        elif name == "skewX":
            t[0, 1] = math.tan(math.radians(vals[0]))
        elif name == "skewY":
            t[1, 0] = math.tan(math.radians(vals[0]))
        else:
            raise SvgParseError(f"malformed transform {name}({args})")
        m = m @ t
    return m


class _PathParser:
    """Stateful walk over one path's tokenized data."""

    def __init__(self, d: str, transform: np.ndarray):
        self.tokens = _NUMBER.findall(d)
        self.pos = 0
        self.transform = transform
        self.cur = np.zeros(2)
        self.start = np.zeros(2)
        self.prev_cubic_ctrl = None
        self.prev_quad_ctrl = None
        self.quads: list = []
        self.paths: list[RawPath] = []
        self.any_move = False

    def _next_number(self) -> float:
        if self.pos >= len(self.tokens) or self.tokens[self.pos].isalpha():
            raise SvgParseError("path data ended while reading coordinates")
        v = float(self.tokens[self.pos])
        self.pos += 1
        return v

    def _pair(self, relative: bool) -> np.ndarray:
        x = self._next_number()
        y = self._next_number()
        p = np.array([x, y])
        return self.cur + p if relative else p

    def _more_numbers(self) -> bool:
        return (self.pos < len(self.tokens)
                and not self.tokens[self.pos].isalpha())

    def _emit(self, p1, p2, p3):
        self.quads.append(np.array([self.cur, p1, p2, p3]))
        self.cur = np.asarray(p3, dtype=float)

    def _emit_line(self, p3):
        p3 = np.asarray(p3, dtype=float)
        self._emit(self.cur + (p3 - self.cur) / 3.0,
                   self.cur + 2.0 * (p3 - self.cur) / 3.0, p3)

    def _close(self):
        if np.hypot(*(self.cur - self.start)) > 1e-9:
            self._emit_line(self.start)
        if self.quads:
            quads = np.asarray(self.quads)
            flat = quads.reshape(-1, 2)
            ones = np.ones((flat.shape[0], 1))
            mapped = (np.hstack([flat, ones]) @ self.transform.T)[:, :2]
            self.paths.append(RawPath(mapped.reshape(quads.shape)))
        self.quads = []
        self.cur = self.start.copy()

    def run(self) -> list[RawPath]:
        while self.pos < len(self.tokens):
            cmd = self.tokens[self.pos]
            if not cmd.isalpha():
                raise SvgParseError(f"expected a command, got {cmd!r}")
            self.pos += 1
            rel = cmd.islower()
            op = cmd.upper()
            if op == "A":
                raise SvgUnsupportedCommandError(cmd)
            if op == "M":
                if self.quads:
                    raise SvgTopologyError(
                        "subpath restarted without being closed")
                first = self._pair(rel and self.any_move)
                self.any_move = True
                self.cur = first
                self.start = first.copy()
                self.prev_cubic_ctrl = self.prev_quad_ctrl = None
                while self._more_numbers():  # implicit line-to pairs
                    self._emit_line(self._pair(rel))
            elif op == "L":
                while True:
                    self._emit_line(self._pair(rel))
                    if not self._more_numbers():
                        break
                self.prev_cubic_ctrl = self.prev_quad_ctrl = None
            elif op in ("H", "V"):
                while True:
                    v = self._next_number()
                    p = self.cur.copy()
                    axis = 0 if op == "H" else 1
                    p[axis] = p[axis] + v if rel else v
                    self._emit_line(p)
                    if not self._more_numbers():
                        break
                self.prev_cubic_ctrl = self.prev_quad_ctrl = None
            elif op in ("C", "S"):
                while True:
                    if op == "C":
                        p1 = self._pair(rel)
                    elif self.prev_cubic_ctrl is not None:
                        p1 = 2.0 * self.cur - self.prev_cubic_ctrl
                    else:
                        p1 = self.cur.copy()
                    p2 = self._pair(rel)
                    p3 = self._pair(rel)
                    self._emit(p1, p2, p3)
                    self.prev_cubic_ctrl = p2
                    if not self._more_numbers():
                        break
                self.prev_quad_ctrl = None
            elif op in ("Q", "T"):
                while True:
                    if op == "Q":
                        qc = self._pair(rel)
                    elif self.prev_quad_ctrl is not None:
                        qc = 2.0 * self.cur - self.prev_quad_ctrl
                    else:
                        qc = self.cur.copy()
                    p3 = self._pair(rel)
                    self._emit(self.cur + 2.0 * (qc - self.cur) / 3.0,
                               p3 + 2.0 * (qc - p3) / 3.0, p3)
                    self.prev_quad_ctrl = qc
                    if not self._more_numbers():
                        break
                self.prev_cubic_ctrl = None
            elif op == "Z":
                self._close()
                self.prev_cubic_ctrl = self.prev_quad_ctrl = None
            else:
                raise SvgUnsupportedCommandError(cmd)
        if self.quads:
            raise SvgTopologyError("path data ended with an unclosed subpath")
        return self.paths


def parse_svg(text: str) -> list[RawPath]:
    """All closed subpaths of the document, transforms applied."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as err:
        raise SvgParseError(f"not a well-formed SVG document: {err}") from None

    paths: list[RawPath] = []

    def walk(el, xform):
        local = xform @ _parse_transform(el.get("transform"))
        tag = el.tag.rsplit("}", 1)[-1]
        if tag == "path":
            d = el.get("d", "")
            if d.strip():
                paths.extend(_PathParser(d, local).run())
        for child in el:
            walk(child, local)

    walk(root, np.eye(3))
    return paths


def import_chain(raw: RawPath, curve: ClosedCurve, index: CurveIndex,
                 snap_radius: float = 10.0) -> BezierChain:
    """Project a raw subpath onto a boundary curve as an all-corner chain.

    End points farther than ``snap_radius`` from the curve raise an
    import error naming the offending point.
    """
    quads = np.array(raw.quads)
    big_t = curve.total_length

    def project(qs):
        ts = []
        for q in qs:
            _, t, dist = index.nearest(q[0])
            if dist > snap_radius:
                raise SvgImportError(
                    f"end point ({q[0][0]:.2f}, {q[0][1]:.2f}) is "
                    f"{dist:.2f}px from the boundary (snap radius "
                    f"{snap_radius:g})", point=q[0])
            ts.append(t)
        return ts

    ts = project(quads)
    k = len(ts)
    if k >= 2:
        forward = sum((ts[(i + 1) % k] - ts[i]) % big_t <= big_t / 2.0
                      for i in range(k))
        if forward < k - forward:
            quads = quads[::-1, ::-1]
            # the reversed path starts at the same end point, then visits
            # the remaining ones backwards
            ts = [ts[0]] + ts[1:][::-1]

    # keep the first end point, then only those that advance strictly
    # forward without wrapping past the start; later offenders are dropped
    keep = [0]
    travelled = 0.0
    for i in range(1, k):
        step = (ts[i] - ts[keep[-1]]) % big_t
        if step <= 0.0 or travelled + step >= big_t:
            continue
        travelled += step
        keep.append(i)
    if len(keep) < 2:
        raise SvgTopologyError(
            "fewer than two usable end points after projection")

    nodes = []
    for i in keep:
        p0, p1, _, p3 = quads[i]
        direction = p1 - p0
        if np.hypot(*direction) < 1e-12:
            direction = p3 - p0
        alpha = math.atan2(direction[1], direction[0])
        nodes.append(Node.on_curve(curve, ts[i], alpha, NodeKind.CORNER))

    gaps = node_gaps(curve, [nd.t for nd in nodes])
    segments = []
    for j, i in enumerate(keep):
        nxt = keep[(j + 1) % len(keep)]
        start = nodes[j]
        end = nodes[(j + 1) % len(nodes)]
        contiguous = (nxt == (i + 1) % k)
        if contiguous:
            p0, p1, p2, p3 = quads[i]
            lam, gamma, beta, delta = from_control_points(
                p0, p1, p2, p3, start.alpha, end.alpha, gaps[j])
            segments.append(BezierSegment(lam, gamma, beta, delta, gaps[j]))
        else:
            # dropped end points in between: merge the span and refit it
            try:
                segments.append(linear_fit(
                    curve, index, start.t, end.t, start.alpha, end.alpha,
                    length=gaps[j]))
            except FitError as err:
                raise SvgImportError(
                    f"could not refit merged span after dropping end "
                    f"points: {err}") from None
    return BezierChain(tuple(nodes), tuple(segments))


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def write_svg(chains, width, height) -> str:
    """Deterministic SVG document with one filled path per chain."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
    ]
    for chain in chains:
        parts = []
        first = chain.nodes[0].position
        parts.append(f"M {_fmt(first[0])} {_fmt(first[1])}")
        for _, seg, start, end in chain.sections():
            cps = control_points(seg, start, end)
            coords = " ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in cps[1:])
            parts.append(f"C {coords}")
        parts.append("Z")
        lines.append(f'<path d="{" ".join(parts)}" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
