"""Figure rendering: SVG overlays and matplotlib report figures.

``render_overlay`` builds a plain SVG string showing the extracted
boundary in green, the Bezier sections in black and the nodes as circles
(red for corners, blue for regular points).  ``save_report_figure``
renders the same scene with matplotlib, adding the per-sweep energy
traces when a refinement ran, and writes it to an image file next to the
textual report.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .geometry import BezierChain, ClosedCurve, NodeKind, control_points
from .metrics import flatten_chain

_KIND_COLOR = {NodeKind.CORNER: "red", NodeKind.REGULAR: "blue"}


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_overlay(curves, chains, width, height,
                   node_radius: float = 4.0) -> str:
    """Deterministic SVG overlay of curves, chains and node markers."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
    ]
    for curve in curves:
        pts = " L ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in curve.samples)
        lines.append(f'<path d="M {pts} Z" fill="none" stroke="green" '
                     'stroke-width="1"/>')
    for chain in chains:
        parts = [f"M {_fmt(chain.nodes[0].position[0])} "
                 f"{_fmt(chain.nodes[0].position[1])}"]
        for _, seg, start, end in chain.sections():
            cps = control_points(seg, start, end)
            coords = " ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in cps[1:])
            parts.append(f"C {coords}")
        parts.append("Z")
        lines.append(f'<path d="{" ".join(parts)}" fill="none" '
                     'stroke="black" stroke-width="1"/>')
    for chain in chains:
        for node in chain.nodes:
            color = _KIND_COLOR[node.kind]
            lines.append(
                f'<circle cx="{_fmt(node.position[0])}" '
                f'cy="{_fmt(node.position[1])}" r="{node_radius:g}" '
                f'fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def save_report_figure(path, curves, chains, traces=None,
                       title: str | None = None) -> None:
    """Render the vectorization (and energy traces, if any) to a file."""
    with_trace = traces is not None and any(len(t) > 1 for t in traces)
    fig = Figure(figsize=(11, 5.5) if with_trace else (6.5, 6.5), dpi=120)
    FigureCanvasAgg(fig)
    if with_trace:
        ax, ax_trace = fig.subplots(1, 2)
    else:
        ax = fig.subplots(1, 1)
        ax_trace = None

    for curve in curves:
        pts = np.vstack([curve.samples, curve.samples[:1]])
        ax.plot(pts[:, 0], pts[:, 1], color="green", linewidth=1.0,
                label="boundary")
    for chain in chains:
        for poly in flatten_chain(chain, tol=0.1):
            ax.plot(poly[:, 0], poly[:, 1], color="black", linewidth=1.0)
        for node in chain.nodes:
            ax.plot(node.position[0], node.position[1], "o",
                    markersize=4, color=_KIND_COLOR[node.kind])
    ax.set_aspect("equal")
    ax.invert_yaxis()
    ax.set_title(title or "vectorization")

    if ax_trace is not None:
        for i, trace in enumerate(traces):
            ax_trace.plot(range(len(trace)), trace, marker="o",
                          label=f"curve {i}")
        ax_trace.set_xlabel("sweep")
        ax_trace.set_ylabel("energy")
        ax_trace.set_title("energy per sweep")
        if len(traces) > 1:
            ax_trace.legend()
    fig.tight_layout()
    fig.savefig(path)
