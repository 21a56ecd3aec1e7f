"""Distance-weighted active contour refinement of a Bezier chain.

The quality of a section is the geodesic length ``integral of
(d_C(B(s)) + w) * |B'(s)| ds``: the Euclidean length element weighted by
the distance to the target curve plus an optional length penalty w.  The
total chain energy is the sum over sections.  Minimization alternates

  * per-section gradient descent on the four frame parameters, with the
    gradient taken by central finite differences and an Armijo
    backtracking line search, and
  * an exhaustive local grid search per node over positions within r_t
    pixels of arc length and tangent angles within r_alpha degrees,
    where every candidate is scored by refitting its two incident
    sections (linear estimate, then a capped descent).

Each accepted update is re-polished by a full descent and is only kept
when it does not increase the stored energy, so the per-sweep energy
trace is non-increasing by construction.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.ndimage import distance_transform_edt

from .distfield import CurveIndex, build_index
from .fitting import FitError, linear_fit
from .geometry import (BezierChain, BezierSegment, ClosedCurve, Node,
                       NodeKind, control_points, node_gaps, tangent_frame,
                       wrap_angle)


@dataclass(frozen=True)
class DescentParams:
    """Gradient descent controls for the per-section minimization."""

    max_iters: int = 200
    fd_step: float = 1e-4
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    init_step: float = 1e-2


@dataclass(frozen=True)
class RefineParams:
    """Active contour controls.

    ``w_default`` applies to every section unless overridden per section
    index through ``w_overrides``.  The node grid search spans ``r_t``
    pixels in steps of ``t_step`` and ``r_alpha`` degrees in steps of
    ``alpha_step`` (angles are skipped at corner nodes).  Sweeps stop when
    the relative energy decrease falls below ``stop_rel``.
    """

    w_default: float = 0.0
    w_overrides: dict = field(default_factory=dict)
    r_t: float = 2.0
    r_alpha: float = 4.0
    alpha_step: float = 1.0
    t_step: float = 1.0
    stop_rel: float = 1e-3
    max_sweeps: int = 50
    descent: DescentParams = field(default_factory=DescentParams)

    def __post_init__(self):
        if min(self.r_t, self.r_alpha, self.alpha_step, self.t_step) <= 0:
            raise ValueError("search radii and steps must be positive")
        if not 0 <= self.stop_rel < 1:
            raise ValueError("stop_rel must be in [0, 1)")

    def weight(self, segment_index: int) -> float:
        return float(self.w_overrides.get(segment_index, self.w_default))


class _SurrogateField:
    """Cheap approximate curve distance used only to steer inner descents.

    An exact Euclidean distance transform of the rasterized curve samples
    on a 1 px grid, sampled bilinearly.  Its error is below about one
    pixel near the curve, which is plenty to guide a line search; every
    accepted result and every reported energy is re-evaluated against the
    exact distance index, so the surrogate never leaks into scores.
    """

    def __init__(self, curve: ClosedCurve, spacing: float = 1.0,
                 margin: float = 16.0):
        lo = curve.samples.min(axis=0) - margin
        hi = curve.samples.max(axis=0) + margin
        self.origin = lo
        self.spacing = spacing
        nx = int(math.ceil((hi[0] - lo[0]) / spacing)) + 2
        ny = int(math.ceil((hi[1] - lo[1]) / spacing)) + 2
        seeds = np.zeros((ny, nx), dtype=bool)
        ij = np.round((curve.samples - lo) / spacing).astype(int)
        seeds[ij[:, 1], ij[:, 0]] = True
        self.values = distance_transform_edt(~seeds, sampling=spacing)
        self.nx = nx
        self.ny = ny

    def sample(self, pts: np.ndarray) -> np.ndarray:
        g = (pts - self.origin) / self.spacing
        gx = np.clip(g[:, 0], 0.0, self.nx - 1.001)
        gy = np.clip(g[:, 1], 0.0, self.ny - 1.001)
        # points outside the grid pay their clamping offset on top
        excess = np.hypot(g[:, 0] - gx, g[:, 1] - gy) * self.spacing
        ix = gx.astype(np.int64)
        iy = gy.astype(np.int64)
        fx = gx - ix
        fy = gy - iy
        v = self.values
        top = v[iy, ix] * (1.0 - fx) + v[iy, ix + 1] * fx
        bot = v[iy + 1, ix] * (1.0 - fx) + v[iy + 1, ix + 1] * fx
        return top * (1.0 - fy) + bot * fy + excess


_surrogates: "weakref.WeakKeyDictionary[ClosedCurve, _SurrogateField]" = \
    weakref.WeakKeyDictionary()


def _surrogate_for(curve: ClosedCurve) -> _SurrogateField:
    sur = _surrogates.get(curve)
    if sur is None:
        sur = _SurrogateField(curve)
        _surrogates[curve] = sur
    return sur


@lru_cache(maxsize=512)
def _midpoint_basis(q: int):
    u = (np.arange(q) + 0.5) / q
    v = 1.0 - u
    b = np.stack([v**3, 3 * v**2 * u, 3 * v * u**2, u**3], axis=1)
    db = np.stack([3 * v**2, 6 * v * u, 3 * u**2], axis=1)
    b.setflags(write=False)
    db.setflags(write=False)
    return b, db


def quadrature_count(length: float) -> int:
    return max(32, int(math.ceil(length)))


def _quadrature(cps: np.ndarray, q: int):
    """Section points and |dB/du| at the q midpoint abscissae, batched."""
    basis, dbasis = _midpoint_basis(q)
    pts = np.matmul(basis, cps)                      # (k, q, 2)
    der = np.matmul(dbasis, cps[:, 1:] - cps[:, :-1])
    speed = np.hypot(der[..., 0], der[..., 1])
    return pts, speed


def _batch_energies(index: CurveIndex, cps: np.ndarray, w: float,
                    q: int) -> np.ndarray:
    """Energies of a (k, 4, 2) batch of control point sets.

    Composite midpoint rule with q sub-intervals; the arc element uses the
    exact cubic derivative, so the section length never enters explicitly:
    E = sum_i (d_i + w) * |dB/du(u_i)| / q.
    """
    pts, speed = _quadrature(cps, q)
    dist = index.distances(pts.reshape(-1, 2)).reshape(pts.shape[0], q)
    return ((dist + w) * speed).sum(axis=1) / q


def _bezier_lengths(cps: np.ndarray, q: int) -> np.ndarray:
    return _quadrature(cps, q)[1].sum(axis=1) / q


def segment_energy(index: CurveIndex, seg: BezierSegment, start: Node,
                   end: Node, w: float = 0.0) -> float:
    """Distance-weighted length of one section against the indexed curve."""
    cps = control_points(seg, start, end)[None]
    return float(_batch_energies(index, cps, w, quadrature_count(seg.length))[0])


def bezier_arc_length(seg: BezierSegment, start: Node, end: Node,
                      q: int | None = None) -> float:
    """Arc length of the section by the same midpoint rule as the energy."""
    cps = control_points(seg, start, end)[None]
    return float(_bezier_lengths(cps, q or quadrature_count(seg.length))[0])


class _SectionProblem:
    """Energy of one section as a function of its free frame parameters.

    ``dist_fn`` maps an (N, 2) point array to distances; it is the exact
    index query by default and a surrogate field during inner descents.
    """

    def __init__(self, index, start: Node, end: Node, length: float,
                 w: float, dist_fn=None, q: int | None = None):
        self.w = w
        self.length = length
        self.q = q if q is not None else quadrature_count(length)
        self.dist_fn = dist_fn if dist_fn is not None else index.distances
        self.t0, self.n0 = tangent_frame(start.alpha)
        self.t1, self.n1 = tangent_frame(end.alpha)
        self.p0 = start.position
        self.p3 = end.position
        self.free = np.array([True, start.kind is NodeKind.CORNER,
                              True, end.kind is NodeKind.CORNER])

    def control_points(self, thetas: np.ndarray) -> np.ndarray:
        k = thetas.shape[0]
        cps = np.empty((k, 4, 2))
        cps[:, 0] = self.p0
        cps[:, 3] = self.p3
        cps[:, 1] = self.p0 + self.length * (
            thetas[:, 0, None] * self.t0 + thetas[:, 1, None] * self.n0)
        cps[:, 2] = self.p3 - self.length * (
            thetas[:, 2, None] * self.t1 + thetas[:, 3, None] * self.n1)
        return cps

    def energies(self, thetas: np.ndarray) -> np.ndarray:
        cps = self.control_points(thetas)
        pts, speed = _quadrature(cps, self.q)
        dist = self.dist_fn(pts.reshape(-1, 2)).reshape(pts.shape[0], self.q)
        return ((dist + self.w) * speed).sum(axis=1) / self.q


def _descend(problem: _SectionProblem, theta0: np.ndarray,
             opts: DescentParams, stop_gain_rel: float = 1e-10):
    """Gradient descent with Armijo backtracking; never increases energy.

    Stops at the iteration cap, when no improving step exists, or when an
    accepted step gains less than ``stop_gain_rel`` of the energy.
    """
    theta = theta0.copy()
    energy = float(problem.energies(theta[None])[0])
    free_idx = np.nonzero(problem.free)[0]
    if free_idx.size == 0:
        return theta, energy
    h = opts.fd_step
    warm_step = None
    prev_theta = None
    prev_grad = None
    for _ in range(opts.max_iters):
        probes = np.repeat(theta[None], 2 * free_idx.size, axis=0)
        for row, j in enumerate(free_idx):
            probes[2 * row, j] += h
            probes[2 * row + 1, j] -= h
        vals = problem.energies(probes)
        grad = (vals[0::2] - vals[1::2]) / (2.0 * h)
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0 or not np.isfinite(gnorm2):
            break
        # initial trial step: spectral (secant) estimate when history is
        # available, otherwise a unit-length parameter step
        start_step = None
        if prev_grad is not None:
            s = theta[free_idx] - prev_theta[free_idx]
            y = grad - prev_grad
            sy = float(s @ y)
            yy = float(y @ y)
            if sy > 0.0 and yy > 0.0:
                start_step = sy / yy
        if start_step is None:
            if warm_step is None:
                start_step = opts.init_step / max(1.0, math.sqrt(gnorm2))
            else:
                start_step = warm_step / opts.backtrack
        # keep the first trial within a quarter parameter unit so line
        # search candidates cannot jump far off the curve
        start_step = min(start_step, 0.25 / math.sqrt(gnorm2))
        prev_theta = theta
        prev_grad = grad
        # Armijo schedule, batched: the first step in the geometric
        # schedule that satisfies the sufficient-decrease test is exactly
        # what sequential backtracking would accept.
        accepted = None
        step0 = start_step
        for chunk in (6, 34):
            steps = step0 * opts.backtrack ** np.arange(chunk)
            cand = np.repeat(theta[None], chunk, axis=0)
            cand[:, free_idx] -= steps[:, None] * grad[None, :]
            cand_e = problem.energies(cand)
            ok = cand_e <= energy - opts.armijo_c * steps * gnorm2
            hit = np.nonzero(ok)[0]
            if hit.size:
                k = int(hit[0])
                accepted = (steps[k], cand[k], float(cand_e[k]))
                break
            step0 = step0 * opts.backtrack ** chunk
        if accepted is None:
            break
        warm_step, theta, new_energy = accepted
        gain = energy - new_energy
        energy = new_energy
        if gain <= stop_gain_rel * max(energy, 1e-12):
            break
    return theta, energy


def refine_segment(index: CurveIndex, seg: BezierSegment, start: Node,
                   end: Node, w: float = 0.0,
                   descent: DescentParams = DescentParams()) -> BezierSegment:
    """Descend the section energy over the free frame parameters.

    Returns parameters whose energy is never above the input's; when no
    improving step exists the input section is returned unchanged.
    """
    problem = _SectionProblem(index, start, end, seg.length, w)
    theta0 = seg.params()
    e0 = float(problem.energies(theta0[None])[0])
    theta, energy = _descend(problem, theta0, descent)
    if energy < e0:
        return seg.with_params(theta)
    return seg


def _refine_inner(index: CurveIndex, surrogate, seg: BezierSegment,
                  start: Node, end: Node, w: float, descent: DescentParams):
    """Capped inner descent on the surrogate distance with an exact guard.

    The descent runs on the surrogate field with a capped quadrature and
    the result is scored once against the exact energy.  Score distances
    are exact within three grid cells of the curve; a candidate whose
    sections stray farther is hopeless anyway and is scored by the
    surrogate instead of a full scan.  Monotonicity is enforced by exact
    re-evaluation of whatever candidate wins, so approximate scores of
    losing candidates never leak into the chain.
    """
    theta0 = seg.params()
    guided = _SectionProblem(index, start, end, seg.length, w,
                             dist_fn=surrogate.sample,
                             q=min(quadrature_count(seg.length), 128))
    theta, _ = _descend(guided, theta0, descent, stop_gain_rel=3e-7)
    scoring = _SectionProblem(
        index, start, end, seg.length, w,
        dist_fn=lambda pts: index.distances(pts,
                                            far_fallback=surrogate.sample))
    if not np.array_equal(theta, theta0):
        seg = seg.with_params(theta)
    return seg, float(scoring.energies(seg.params()[None])[0])


def _chain_weights(params: RefineParams, n: int):
    return [params.weight(i) for i in range(n)]


def total_energy(index: CurveIndex, chain: BezierChain,
                 params: RefineParams) -> float:
    """Summed section energies with the per-section weights applied."""
    return sum(segment_energy(index, seg, start, end, params.weight(i))
               for i, seg, start, end in chain.sections())


def _stored_incident_energy(index: CurveIndex, chain: BezierChain, n: int,
                            params: RefineParams) -> float:
    """Energy of the sections incident to node n as currently stored."""
    count = len(chain.nodes)
    node = chain.nodes[n]
    if count == 1:
        return segment_energy(index, chain.segments[0], node, node,
                              params.weight(0))
    return (segment_energy(index, chain.segments[(n - 1) % count],
                           chain.nodes[(n - 1) % count], node,
                           params.weight((n - 1) % count))
            + segment_energy(index, chain.segments[n], node,
                             chain.nodes[(n + 1) % count], params.weight(n)))


def _candidate_sections(index: CurveIndex, curve: ClosedCurve,
                        chain: BezierChain, n: int, cand: Node,
                        params: RefineParams):
    """Refit the sections incident to a candidate for node n; returns
    (energy, seg_before, seg_after) or None when the candidate is not
    admissible."""
    count = len(chain.nodes)
    inner = replace(params.descent, max_iters=20)
    surrogate = _surrogate_for(curve)
    if count == 1:
        # the single section wraps the whole curve back to the node itself
        w = params.weight(0)
        try:
            seg = linear_fit(curve, index, cand.t, cand.t, cand.alpha,
                             cand.alpha,
                             fix_gamma=cand.kind is NodeKind.REGULAR,
                             fix_delta=cand.kind is NodeKind.REGULAR,
                             length=curve.total_length)
        except FitError:
            return None
        seg, energy = _refine_inner(index, surrogate, seg, cand, cand, w,
                                    inner)
        return energy, seg, seg

    prev = chain.nodes[(n - 1) % count]
    nxt = chain.nodes[(n + 1) % count]
    span = (curve.total_length if count == 2
            else curve.length_between(prev.t, nxt.t))
    before = curve.length_between(prev.t, cand.t)
    after = curve.length_between(cand.t, nxt.t)
    if not (0.0 < before < span and 0.0 < after < span):
        return None
    w_before = params.weight((n - 1) % count)
    w_after = params.weight(n)
    try:
        seg_b = linear_fit(curve, index, prev.t, cand.t, prev.alpha,
                           cand.alpha,
                           fix_gamma=prev.kind is NodeKind.REGULAR,
                           fix_delta=cand.kind is NodeKind.REGULAR)
        seg_a = linear_fit(curve, index, cand.t, nxt.t, cand.alpha, nxt.alpha,
                           fix_gamma=cand.kind is NodeKind.REGULAR,
                           fix_delta=nxt.kind is NodeKind.REGULAR)
    except FitError:
        return None
    seg_b, e_b = _refine_inner(index, surrogate, seg_b, prev, cand, w_before,
                               inner)
    seg_a, e_a = _refine_inner(index, surrogate, seg_a, cand, nxt, w_after,
                               inner)
    return e_b + e_a, seg_b, seg_a


def node_objective(index: CurveIndex, chain: BezierChain, n: int, t: float,
                   alpha: float,
                   params: RefineParams | None = None) -> float:
    """Summed energy of node n's incident sections for a candidate (t, alpha).

    The sections are refit per candidate; an inadmissible candidate (one
    that collides with or passes a neighbor node) scores infinity.
    """
    params = params or RefineParams()
    curve = index.curve
    if curve is None:
        raise ValueError("index was not built from a closed curve")
    node = chain.nodes[n]
    cand = Node.on_curve(curve, t, alpha, node.kind)
    result = _candidate_sections(index, curve, chain, n, cand, params)
    if result is None:
        return math.inf
    energy = result[0]
    if cand.t == node.t and cand.alpha == node.alpha:
        # the stored parameters are themselves admissible for the current
        # node, so the refit can never score worse than the chain holds
        return min(energy, _stored_incident_energy(index, chain, n, params))
    return energy


def optimize_node(index: CurveIndex, chain: BezierChain, n: int,
                  params: RefineParams | None = None) -> BezierChain:
    """Grid search over (t, alpha) for node n, keeping the best refit.

    Ties prefer the current node, then the smaller |dt|, then the smaller
    |dalpha|; the chain is returned unchanged unless the winning candidate
    strictly improves the stored energy of the incident sections.
    """
    params = params or RefineParams()
    curve = index.curve
    if curve is None:
        raise ValueError("index was not built from a closed curve")
    count = len(chain.nodes)
    node = chain.nodes[n]
    w_before = params.weight((n - 1) % count)
    w_after = params.weight(n)
    stored = _stored_incident_energy(index, chain, n, params)

    kt = int(round(params.r_t / params.t_step))
    dts = [k * params.t_step for k in range(-kt, kt + 1)]
    if node.kind is NodeKind.CORNER:
        das = [0.0]
    else:
        ka = int(round(params.r_alpha / params.alpha_step))
        das = [k * params.alpha_step for k in range(-ka, ka + 1)]

    best = None
    for dt in dts:
        for da in das:
            cand = Node.on_curve(curve, node.t + dt,
                                 node.alpha + math.radians(da), node.kind)
            result = _candidate_sections(index, curve, chain, n, cand, params)
            if result is None:
                continue
            energy, seg_b, seg_a = result
            key = (energy, 0 if (dt == 0.0 and da == 0.0) else 1,
                   abs(dt), abs(da))
            if best is None or key < best[0]:
                best = (key, cand, seg_b, seg_a)
    if best is None or best[0][0] >= stored:
        return chain

    _, cand, seg_b, seg_a = best
    # accept only on a fully exact re-score, since candidate scoring may
    # approximate distances far away from the curve
    if count == 1:
        if segment_energy(index, seg_a, cand, cand, w_after) >= stored:
            return chain
        seg = refine_segment(index, seg_a, cand, cand, w_after, params.descent)
        return BezierChain((cand,), (seg,))
    prev = chain.nodes[(n - 1) % count]
    nxt = chain.nodes[(n + 1) % count]
    exact_energy = (segment_energy(index, seg_b, prev, cand, w_before)
                    + segment_energy(index, seg_a, cand, nxt, w_after))
    if exact_energy >= stored:
        return chain
    # final polish with the full iteration budget; descent never increases
    seg_b = refine_segment(index, seg_b, prev, cand, w_before, params.descent)
    seg_a = refine_segment(index, seg_a, cand, nxt, w_after, params.descent)
    return chain.replace_node(n, cand, seg_b, seg_a)


def run(curve: ClosedCurve, chain0: BezierChain,
        params: RefineParams | None = None,
        index: CurveIndex | None = None):
    """Sweep node optimizations until the energy stops improving.

    Returns (refined chain, per-sweep total energy trace).  The trace has
    one entry per completed sweep plus the initial energy and is
    non-increasing.
    """
    params = params or RefineParams()
    if index is None:
        index = build_index(curve)
    chain = chain0
    trace = [total_energy(index, chain, params)]
    for _ in range(params.max_sweeps):
        for n in range(len(chain.nodes)):
            chain = optimize_node(index, chain, n, params)
        energy = total_energy(index, chain, params)
        trace.append(energy)
        prev = trace[-2]
        if prev <= 0.0 or (prev - energy) / prev < params.stop_rel:
            break
    return chain, trace
