"""Baseline vectorization driven by a chord-angle cornerness measure.

Corners are picked greedily: the measure ``kappa`` at parameter t is the
cosine of the angle between the forward and backward chords of arc
length sigma, plus one, so straight runs score 0, right angles score 1
and cusps approach 2.  The highest-scoring parameters are accepted as
corner nodes while they stay above a threshold and outside a protective
arc-length neighborhood of already accepted corners.

Regular nodes are then inserted where the fitted sections stray from the
curve: fit all sections by least squares, locate the section point
farthest from the curve, and add the closest admissible curve parameter
as a new regular node until the worst distance drops below ``max_dist``
or no admissible parameter remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distfield import CurveIndex, build_index
from .fitting import fit_chain
from .geometry import BezierChain, ClosedCurve, Node, NodeKind, control_points
from .refine import _midpoint_basis, quadrature_count


@dataclass(frozen=True)
class VectorizerParams:
    """Controls for corner detection and regular-point insertion."""

    max_dist: float = 6.0
    min_length: float = 25.0
    sigma: float = 20.0
    kappa_min: float = 0.5

    def __post_init__(self):
        if min(self.max_dist, self.min_length, self.sigma, self.kappa_min) <= 0:
            raise ValueError("all parameters must be positive")
        if self.kappa_min > 2.0:
            raise ValueError("kappa_min cannot exceed 2")


@dataclass(frozen=True)
class VectorizeResult:
    """A fitted chain plus whether the max-distance goal was reached.

    ``within_tolerance`` is False when insertion ran out of admissible
    parameters before pushing the worst deviation below max_dist.
    """

    chain: BezierChain
    within_tolerance: bool


def _check_length(curve: ClosedCurve, sigma: float):
    if curve.total_length <= 2.0 * sigma:
        raise ValueError(
            f"curve of length {curve.total_length:.1f} is too short for "
            f"sigma {sigma:g} (needs more than 2 sigma)")


def cornerness(curve: ClosedCurve, t: float, sigma: float) -> float:
    """Chord-angle cornerness in [0, 2] at parameter t."""
    _check_length(curve, sigma)
    c = curve.point_at(t)
    fwd = curve.point_at(t + sigma) - c
    back = curve.point_at(t - sigma) - c
    nf = math.hypot(*fwd)
    nb = math.hypot(*back)
    if nf < 1e-12 or nb < 1e-12:
        return 0.0
    cosang = float(fwd @ back) / (nf * nb)
    return min(1.0, max(-1.0, cosang)) + 1.0


def cornerness_profile(curve: ClosedCurve, sigma: float) -> np.ndarray:
    """Cornerness evaluated at every curve sample."""
    _check_length(curve, sigma)
    ts = curve.cum_length
    c = curve.samples
    fwd = curve.point_at(ts + sigma) - c
    back = curve.point_at(ts - sigma) - c
    nf = np.hypot(fwd[:, 0], fwd[:, 1])
    nb = np.hypot(back[:, 0], back[:, 1])
    denom = np.maximum(nf * nb, 1e-300)
    cosang = np.einsum("ij,ij->i", fwd, back) / denom
    kappa = np.clip(cosang, -1.0, 1.0) + 1.0
    kappa[(nf < 1e-12) | (nb < 1e-12)] = 0.0
    return kappa


def detect_corners(curve: ClosedCurve,
                   params: VectorizerParams | None = None) -> list[Node]:
    """Greedy corner picking on the sample grid.

    Repeatedly accepts the highest-cornerness sample outside the
    min_length neighborhoods of already accepted corners, while the score
    stays at or above kappa_min.  Returned nodes are ordered by parameter.
    """
    params = params or VectorizerParams()
    kappa = cornerness_profile(curve, params.sigma)
    ts = curve.cum_length
    big_t = curve.total_length
    available = np.ones(ts.shape[0], dtype=bool)
    picked = []
    while available.any():
        i = int(np.argmax(np.where(available, kappa, -np.inf)))
        if kappa[i] < params.kappa_min:
            break
        picked.append(i)
        rel = np.mod(ts - ts[i], big_t)
        near = (rel <= params.min_length) | (rel >= big_t - params.min_length)
        available &= ~near
    picked.sort(key=lambda i: ts[i])
    return [Node.on_curve(curve, ts[i],
                          curve.smoothed_tangent_angle(ts[i], params.sigma),
                          NodeKind.CORNER)
            for i in picked]


def _worst_chain_point(index: CurveIndex, chain: BezierChain):
    """Section point of maximal distance to the curve, densely sampled."""
    blocks = []
    for _, seg, start, end in chain.sections():
        q = quadrature_count(seg.length)
        basis, _ = _midpoint_basis(q)
        blocks.append(basis @ control_points(seg, start, end))
    pts = np.vstack(blocks)
    dist = index.distances(pts)
    i = int(np.argmax(dist))
    return pts[i], float(dist[i])


def insert_regular_points(curve: ClosedCurve, index: CurveIndex, nodes,
                          params: VectorizerParams | None = None) -> VectorizeResult:
    """Insert regular nodes until the chain stays within max_dist.

    Sections are refit by least squares after every insertion.  The new
    node parameter is the curve sample closest to the worst section
    point, excluding twice-min_length neighborhoods of existing nodes;
    when no admissible parameter remains the current chain is returned
    with ``within_tolerance=False``.
    """
    params = params or VectorizerParams()
    nodes = sorted(nodes, key=lambda nd: nd.t)
    if not nodes:
        raise ValueError("need at least one seed node")
    ts = curve.cum_length
    big_t = curve.total_length
    radius = 2.0 * params.min_length
    while True:
        chain = fit_chain(curve, index, nodes)
        worst_pt, worst_d = _worst_chain_point(index, chain)
        if worst_d <= params.max_dist:
            return VectorizeResult(chain, True)
        admissible = np.ones(ts.shape[0], dtype=bool)
        for nd in nodes:
            rel = np.mod(ts - nd.t, big_t)
            admissible &= ~((rel <= radius) | (rel >= big_t - radius))
        if not admissible.any():
            return VectorizeResult(chain, False)
        d2 = np.einsum("ij,ij->i", curve.samples - worst_pt,
                       curve.samples - worst_pt)
        i = int(np.argmin(np.where(admissible, d2, np.inf)))
        nodes.append(Node.on_curve(
            curve, ts[i], curve.smoothed_tangent_angle(ts[i], params.sigma),
            NodeKind.REGULAR))
        nodes.sort(key=lambda nd: nd.t)


def vectorize(curve: ClosedCurve, params: VectorizerParams | None = None,
              seed_count: int = 2,
              index: CurveIndex | None = None) -> VectorizeResult:
    """Corner detection followed by regular-point insertion.

    A curve without any detected corner is seeded with ``seed_count``
    regular nodes evenly spaced along the curve so insertion has a chain
    to start from.
    """
    params = params or VectorizerParams()
    _check_length(curve, params.sigma)
    if index is None:
        index = build_index(curve)
    nodes = detect_corners(curve, params)
    if not nodes:
        if seed_count < 1:
            raise ValueError("seed_count must be at least 1")
        step = curve.total_length / seed_count
        nodes = [Node.on_curve(curve, k * step,
                               curve.smoothed_tangent_angle(k * step,
                                                            params.sigma),
                               NodeKind.REGULAR)
                 for k in range(seed_count)]
    return insert_regular_points(curve, index, nodes, params)
