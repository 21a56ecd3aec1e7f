"""Silhouette vectorization with distance-refined cubic Bezier outlines.

The pipeline: extract boundary curves from a binary raster, trace them
with a cornerness-driven baseline into chains of cubic Bezier sections,
then refine any chain (including ones imported from external SVG files)
by minimizing the distance-weighted length of the sections while moving
their end points along the curve and rotating the tangent frames at
regular points.
"""

from .curvature import (VectorizeResult, VectorizerParams, cornerness,
                        detect_corners, insert_regular_points, vectorize)
from .distfield import CurveIndex, build_index, build_segment_index
from .fitting import FitError, fit_all, fit_chain, linear_fit
from .geometry import (BezierChain, BezierSegment, ClosedCurve, Node,
                       NodeKind, control_points, eval_bezier,
                       from_control_points, wrap_angle)
from .metrics import (MetricsReport, compare, dist_chain_to_curve,
                      dist_curve_to_chain, single_report, variation_percent)
from .raster import (BinaryImage, EmptySilhouetteError, extract_boundaries,
                     load_binary)
from .refine import (DescentParams, RefineParams, node_objective,
                     optimize_node, refine_segment, segment_energy,
                     total_energy)
from .refine import run as refine_chain
from .svgio import (RawPath, SvgImportError, SvgParseError,
                    SvgTopologyError, SvgUnsupportedCommandError,
                    import_chain, parse_svg, write_svg)

__version__ = "0.1.0"

__all__ = [
    "BezierChain", "BezierSegment", "BinaryImage", "ClosedCurve",
    "CurveIndex", "DescentParams", "EmptySilhouetteError", "FitError",
    "MetricsReport", "Node", "NodeKind", "RawPath", "RefineParams",
    "SvgImportError", "SvgParseError", "SvgTopologyError",
    "SvgUnsupportedCommandError", "VectorizeResult", "VectorizerParams",
    "build_index", "build_segment_index", "compare", "control_points",
    "cornerness", "detect_corners", "dist_chain_to_curve",
    "dist_curve_to_chain", "eval_bezier", "extract_boundaries", "fit_all",
    "fit_chain", "from_control_points", "import_chain",
    "insert_regular_points", "linear_fit", "load_binary", "node_objective",
    "optimize_node", "parse_svg", "refine_chain", "refine_segment",
    "segment_energy", "single_report", "total_energy", "variation_percent",
    "vectorize", "wrap_angle", "write_svg",
]
