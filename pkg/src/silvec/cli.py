"""Command line interface.

Subcommands:

* ``vectorize``: raster silhouette to cubic Bezier SVG via the curvature
  baseline, refined by the active contour unless ``--no-refine``.
* ``refine``: improve an existing SVG vectorization against the raster.
* ``metrics``: score an SVG vectorization against the raster.
* ``overlay``: render boundary, sections and node markers as an SVG
  figure.

Every Jordan curve of the silhouette is processed independently; the
report aggregates per-curve metrics weighted by boundary length and is
printed to stdout as JSON (default) or an aligned table.  Identical
inputs and flags produce byte-identical SVG and JSON outputs.
"""

from __future__ import annotations

import argparse
import json
import sys

from .curvature import VectorizerParams, vectorize
from .distfield import build_index
from .fitting import FitError
from .metrics import (MetricsReport, compare, format_table, single_report,
                      variation_percent)
from .plots import render_overlay, save_report_figure
from .raster import EmptySilhouetteError, extract_boundaries, load_binary
from .refine import RefineParams, run as refine_run
from .svgio import (SvgImportError, SvgParseError, import_chain, parse_svg,
                    write_svg)


def _parse_w_segment(values) -> dict:
    overrides = {}
    for item in values or []:
        try:
            idx, w = item.split("=", 1)
            overrides[int(idx)] = float(w)
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"--w-segment expects INDEX=WEIGHT, got {item!r}") from None
    return overrides


def _add_raster_args(p):
    p.add_argument("input", help="input raster (PNG or PGM)")
    p.add_argument("--threshold", type=int, default=128,
                   help="foreground luminance threshold, 0..255 (default 128)")
    p.add_argument("--invert", action="store_true",
                   help="treat light pixels as foreground")


def _add_vectorizer_args(p):
    p.add_argument("--max-dist", type=float, default=6.0,
                   help="max allowed section-to-curve distance (default 6)")
    p.add_argument("--min-length", type=float, default=25.0,
                   help="min arc length between nodes (default 25)")
    p.add_argument("--sigma", type=float, default=20.0,
                   help="cornerness / tangent smoothing scale (default 20)")
    p.add_argument("--kappa-min", type=float, default=0.5,
                   help="cornerness acceptance threshold (default 0.5)")
    p.add_argument("--seed-nodes", type=int, default=2,
                   help="seed node count for curves without corners "
                        "(default 2)")


def _add_refine_args(p):
    p.add_argument("--w", type=float, default=0.0,
                   help="length penalty applied to every section (default 0)")
    p.add_argument("--w-segment", action="append", metavar="INDEX=WEIGHT",
                   help="per-curve section weight override, repeatable")
    p.add_argument("--r-alpha", type=float, default=4.0,
                   help="tangent angle search radius in degrees (default 4)")
    p.add_argument("--stop-rel", type=float, default=1e-3,
                   help="relative per-sweep improvement to keep going "
                        "(default 1e-3)")
    p.add_argument("--max-sweeps", type=int, default=50,
                   help="sweep budget (default 50)")


def _add_report_args(p):
    p.add_argument("--format", choices=("json", "table"), default="json",
                   help="report format on stdout (default json)")
    p.add_argument("--figure", metavar="PATH",
                   help="also render a matplotlib figure to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="silvec",
        description="Silhouette vectorization with distance-refined "
                    "cubic Bezier outlines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vectorize",
                       help="trace a raster silhouette to a Bezier SVG")
    _add_raster_args(p)
    p.add_argument("-o", "--output", required=True, help="output SVG path")
    _add_vectorizer_args(p)
    _add_refine_args(p)
    _add_report_args(p)
    p.add_argument("--no-refine", action="store_true",
                   help="stop after the curvature baseline")
    p.add_argument("--overlay", metavar="PATH",
                   help="also write an SVG overlay figure to this file")
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("refine",
                       help="refine an existing SVG vectorization")
    _add_raster_args(p)
    p.add_argument("svg", help="initial vectorization (SVG)")
    p.add_argument("-o", "--output", required=True, help="output SVG path")
    p.add_argument("--snap-radius", type=float, default=10.0,
                   help="max end point distance to the boundary (default 10)")
    _add_refine_args(p)
    _add_report_args(p)
    p.add_argument("--overlay", metavar="PATH",
                   help="also write an SVG overlay figure to this file")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("metrics",
                       help="score an SVG vectorization against a raster")
    _add_raster_args(p)
    p.add_argument("svg", help="vectorization to score (SVG)")
    p.add_argument("--snap-radius", type=float, default=10.0,
                   help="max end point distance to the boundary (default 10)")
    _add_report_args(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("overlay",
                       help="render an SVG overlay of boundary and sections")
    _add_raster_args(p)
    p.add_argument("svg", help="vectorization to draw (SVG)")
    p.add_argument("-o", "--output", required=True, help="output SVG path")
    p.add_argument("--snap-radius", type=float, default=10.0,
                   help="max end point distance to the boundary (default 10)")
    p.set_defaults(func=cmd_overlay)
    return parser


def _load_curves(args):
    img = load_binary(args.input, threshold=args.threshold,
                      invert=args.invert)
    curves = extract_boundaries(img)
    return img, curves, [build_index(c) for c in curves]


def _refine_params(args) -> RefineParams:
    return RefineParams(w_default=args.w,
                        w_overrides=_parse_w_segment(args.w_segment),
                        r_alpha=args.r_alpha, stop_rel=args.stop_rel,
                        max_sweeps=args.max_sweeps)


def _aggregate(reports, weights) -> dict:
    """Length-weighted aggregation of per-curve reports."""
    total_w = sum(weights)
    out = {
        "nodes": sum(r.nodes for r in reports),
        "d_B_to_C": sum(r.d_b_to_c * w for r, w in zip(reports, weights))
        / total_w,
        "d_C_to_B": sum(r.d_c_to_b * w for r, w in zip(reports, weights))
        / total_w,
    }
    if all(r.d_b_to_c_before is not None for r in reports):
        before_b = sum(r.d_b_to_c_before * w
                       for r, w in zip(reports, weights)) / total_w
        before_c = sum(r.d_c_to_b_before * w
                       for r, w in zip(reports, weights)) / total_w
        out["d_B_to_C_before"] = before_b
        out["d_C_to_B_before"] = before_c
        out["variation_pct_B_to_C"] = variation_percent(before_b,
                                                        out["d_B_to_C"])
        out["variation_pct_C_to_B"] = variation_percent(before_c,
                                                        out["d_C_to_B"])
    if len(reports) > 1:
        out["curves"] = [r.to_dict() for r in reports]
    return out


def _print_report(args, reports, weights):
    if args.format == "table":
        if len(reports) == 1:
            print(format_table(reports[0]))
        else:
            agg = _aggregate(reports, weights)
            merged = MetricsReport(
                nodes=agg["nodes"], d_b_to_c=agg["d_B_to_C"],
                d_c_to_b=agg["d_C_to_B"],
                d_b_to_c_before=agg.get("d_B_to_C_before"),
                d_c_to_b_before=agg.get("d_C_to_B_before"),
                variation_pct_b_to_c=agg.get("variation_pct_B_to_C"),
                variation_pct_c_to_b=agg.get("variation_pct_C_to_B"))
            print(format_table(merged))
    else:
        print(json.dumps(_aggregate(reports, weights), indent=2,
                         sort_keys=True))


def _write_outputs(args, img, curves, chains, traces=None):
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(write_svg(chains, img.width, img.height))
    if getattr(args, "overlay", None):
        with open(args.overlay, "w", encoding="utf-8") as fh:
            fh.write(render_overlay(curves, chains, img.width, img.height))
    if getattr(args, "figure", None):
        save_report_figure(args.figure, curves, chains, traces)


def cmd_vectorize(args) -> int:
    img, curves, indexes = _load_curves(args)
    vparams = VectorizerParams(max_dist=args.max_dist,
                               min_length=args.min_length, sigma=args.sigma,
                               kappa_min=args.kappa_min)
    rparams = _refine_params(args)
    chains = []
    reports = []
    traces = []
    for curve, index in zip(curves, indexes):
        result = vectorize(curve, vparams, seed_count=args.seed_nodes,
                           index=index)
        if not result.within_tolerance:
            print(f"warning: max distance {args.max_dist:g} not reachable "
                  "without violating the node spacing", file=sys.stderr)
        if args.no_refine:
            chains.append(result.chain)
            traces.append([])
            reports.append(single_report(curve, result.chain, index=index))
        else:
            refined, trace = refine_run(curve, result.chain, rparams,
                                        index=index)
            chains.append(refined)
            traces.append(trace)
            reports.append(compare(curve, result.chain, refined, index=index))
    _write_outputs(args, img, curves, chains, traces)
    _print_report(args, reports, [c.total_length for c in curves])
    return 0


def _match_paths_to_curves(raws, curves, indexes):
    """Assign every imported subpath to its nearest boundary curve."""
    if len(raws) != len(curves):
        raise SvgImportError(
            f"SVG has {len(raws)} closed subpaths but the silhouette has "
            f"{len(curves)} boundary curves")
    assignment = []
    for raw in raws:
        dists = []
        for index in indexes:
            ends = raw.quads[:, 0]
            dists.append(float(index.distances(ends).mean()))
        assignment.append(int(min(range(len(curves)), key=dists.__getitem__)))
    if sorted(assignment) != list(range(len(curves))):
        raise SvgImportError(
            "SVG subpaths do not match the silhouette boundaries one to one")
    return assignment


def _import_all(args, curves, indexes):
    with open(args.svg, encoding="utf-8") as fh:
        raws = parse_svg(fh.read())
    if not raws:
        raise SvgImportError("SVG contains no closed subpaths")
    assignment = _match_paths_to_curves(raws, curves, indexes)
    chains = [None] * len(curves)
    for raw, ci in zip(raws, assignment):
        chains[ci] = import_chain(raw, curves[ci], indexes[ci],
                                  snap_radius=args.snap_radius)
    return chains


def cmd_refine(args) -> int:
    img, curves, indexes = _load_curves(args)
    chains0 = _import_all(args, curves, indexes)
    rparams = _refine_params(args)
    chains = []
    reports = []
    traces = []
    for curve, index, chain0 in zip(curves, indexes, chains0):
        refined, trace = refine_run(curve, chain0, rparams, index=index)
        chains.append(refined)
        traces.append(trace)
        reports.append(compare(curve, chain0, refined, index=index))
    _write_outputs(args, img, curves, chains, traces)
    _print_report(args, reports, [c.total_length for c in curves])
    return 0


def cmd_metrics(args) -> int:
    img, curves, indexes = _load_curves(args)
    chains = _import_all(args, curves, indexes)
    reports = [single_report(curve, chain, index=index)
               for curve, chain, index in zip(curves, chains, indexes)]
    if args.figure:
        save_report_figure(args.figure, curves, chains)
    _print_report(args, reports, [c.total_length for c in curves])
    return 0


def cmd_overlay(args) -> int:
    img, curves, indexes = _load_curves(args)
    chains = _import_all(args, curves, indexes)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(render_overlay(curves, chains, img.width, img.height))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EmptySilhouetteError, SvgParseError, SvgImportError, FitError,
            ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
