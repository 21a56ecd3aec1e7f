"""Linear least-squares estimation of Bezier section parameters.

With the end points and tangent angles fixed, a section is affine in its
four parameters, so matching the curve samples between the two nodes by
arc length is an ordinary least-squares problem.  The sample at arc
offset ds from the start node is paired with the section point at
fraction ds / L.  Constrained parameters (gamma at a regular start node,
delta at a regular end node) are simply removed from the unknowns, which
leaves a 2x2 to 4x4 normal system solved by a small Cholesky
factorization with a pivot-based singularity guard.
"""

from __future__ import annotations

import math

import numpy as np

from .distfield import CurveIndex
from .geometry import (BezierChain, BezierSegment, ClosedCurve, Node,
                       NodeKind, node_gaps, tangent_frame)

_PIVOT_RTOL = 1e-12


class FitError(RuntimeError):
    """Least-squares fit could not be solved for a section."""

    def __init__(self, message: str, segment: int | None = None):
        if segment is not None:
            message = f"section {segment}: {message}"
        super().__init__(message)
        self.segment = segment


def _solve_spd(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve g x = rhs for symmetric positive definite g (at most 4x4)."""
    n = g.shape[0]
    low = np.zeros_like(g)
    lead = None
    for j in range(n):
        piv = g[j, j] - float(low[j, :j] @ low[j, :j])
        if lead is None:
            lead = piv
        if piv <= 0.0 or piv < _PIVOT_RTOL * lead:
            raise FitError("singular normal matrix (degenerate sampling)")
        low[j, j] = math.sqrt(piv)
        for i in range(j + 1, n):
            low[i, j] = (g[i, j] - float(low[i, :j] @ low[j, :j])) / low[j, j]
    # forward then backward substitution
    y = np.zeros(n)
    for i in range(n):
        y[i] = (rhs[i] - float(low[i, :i] @ y[:i])) / low[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - float(low[i + 1:, i] @ x[i + 1:])) / low[i, i]
    return x


def section_samples(curve: ClosedCurve, t: float, t2: float,
                    length: float | None = None):
    """Curve samples strictly inside the arc [t, t2] plus both endpoints.

    Returns (points, u) with u the arc fraction of each sample in [0, 1].
    ``length`` overrides the arc length for a section wrapping the whole
    curve, where length_between(t, t) would be zero.
    """
    big_t = curve.total_length
    span = curve.length_between(t, t2) if length is None else float(length)
    if not span > 0:
        raise FitError("section spans zero arc length")
    rel = np.mod(curve.cum_length - t, big_t)
    inner = (rel > 1e-12) & (rel < span - 1e-12)
    order = np.argsort(rel[inner], kind="stable")
    rel_in = rel[inner][order]
    pts_in = curve.samples[inner][order]
    pts = np.vstack([curve.point_at(t), pts_in, curve.point_at(t + span)])
    u = np.concatenate([[0.0], rel_in / span, [1.0]])
    return pts, u


def linear_fit(curve: ClosedCurve, index: CurveIndex | None, t: float,
               t2: float, alpha: float, alpha2: float,
               fix_gamma: bool = False, fix_delta: bool = False,
               length: float | None = None) -> BezierSegment:
    """Best least-squares section between curve parameters t and t2.

    The quadratic error sums |B(u_s * L) - C(s)|^2 over the curve samples
    in [t, t2]; fixed parameters are held at zero.  ``index`` is unused by
    the solve itself and accepted for call-site symmetry with the energy
    refinement.
    """
    pts, u = section_samples(curve, t, t2, length)
    span = curve.length_between(t, t2) if length is None else float(length)
    b0 = (1.0 - u) ** 3
    b1 = 3.0 * (1.0 - u) ** 2 * u
    b2 = 3.0 * (1.0 - u) * u**2
    b3 = u**3
    x0 = pts[0]
    x1 = pts[-1]
    base = np.outer(b0 + b1, x0) + np.outer(b2 + b3, x1)

    t0, n0 = tangent_frame(alpha)
    t1, n1 = tangent_frame(alpha2)
    cols = [np.outer(b1 * span, t0), np.outer(b1 * span, n0),
            np.outer(-b2 * span, t1), np.outer(-b2 * span, n1)]
    free = [0]
    if not fix_gamma:
        free.append(1)
    free.append(2)
    if not fix_delta:
        free.append(3)

    n_inner = pts.shape[0] - 2
    if 2 * n_inner < len(free):
        raise FitError("fewer samples than unknowns")

    a = np.stack([cols[j] for j in free], axis=2)   # (m, 2, k)
    resid = pts - base
    g = np.einsum("mdi,mdj->ij", a, a)
    rhs = np.einsum("mdi,md->i", a, resid)
    sol = _solve_spd(g, rhs)

    params = np.zeros(4)
    params[free] = sol
    return BezierSegment(lam=params[0], gamma=params[1], beta=params[2],
                         delta=params[3], length=span)


def fit_chain(curve: ClosedCurve, index: CurveIndex | None,
              nodes) -> BezierChain:
    """Linear fit of every section implied by an ordered node cycle."""
    nodes = tuple(nodes)
    gaps = node_gaps(curve, [nd.t for nd in nodes])
    segments = []
    n = len(nodes)
    for i, start in enumerate(nodes):
        end = nodes[(i + 1) % n]
        try:
            segments.append(linear_fit(
                curve, index, start.t, end.t, start.alpha, end.alpha,
                fix_gamma=start.kind is NodeKind.REGULAR,
                fix_delta=end.kind is NodeKind.REGULAR,
                length=gaps[i]))
        except FitError as err:
            raise FitError(str(err), segment=i) from None
    return BezierChain(nodes, tuple(segments))


def fit_all(curve: ClosedCurve, index: CurveIndex | None,
            chain: BezierChain) -> BezierChain:
    """Refit every section of an existing chain by least squares."""
    return fit_chain(curve, index, chain.nodes)
