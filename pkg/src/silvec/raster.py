"""Binary raster input and boundary extraction.

Boundaries are traced along the 0.5 iso-level of the pixel grid using
marching squares on 2x2 blocks of pixel centers, so every contour vertex
is the midpoint of an edge between two adjacent pixel centers.  Directed
segments keep the foreground on their left, which makes outer boundaries
counter-clockwise and hole boundaries clockwise (positive respectively
negative shoelace area in x-right / y-down image coordinates).  The
foreground is treated as 4-connected: ambiguous saddle blocks are split
so that diagonally touching foreground pixels stay on separate contours.

Each traced loop is resampled to an approximately uniform 1 px arc-length
spacing before being returned as a ClosedCurve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .geometry import ClosedCurve


class EmptySilhouetteError(ValueError):
    """Raised when a binary image contains no foreground pixels."""


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Row-major foreground mask; pixel (row r, col c) has center (c, r)."""

    mask: np.ndarray  # (height, width) bool

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("mask must be a non-empty 2D array")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


def load_binary(path, threshold: int = 128, invert: bool = False) -> BinaryImage:
    """Load a PNG or PGM file and threshold it to a foreground mask.

    A pixel is foreground when its luminance is strictly below
    ``threshold`` (dark silhouette on light background); ``invert`` flips
    that.  Color images are converted by luma first.
    """
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must be in [0, 255]")
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"))
    mask = gray < threshold
    if invert:
        mask = ~mask
    return BinaryImage(mask=mask)


# Marching squares case table.  A block is keyed by its four pixel-center
# corners (TL + 2*TR + 4*BL + 8*BR, 1 = foreground) and lists directed
# contour segments between the block's edge midpoints T, R, B, L.  The
# direction convention keeps foreground on the left; saddle blocks (6, 9)
# are split so the diagonal foreground pixels are not joined.
_T, _R, _B, _L = 0, 1, 2, 3
_CASES = {
    0: (), 15: (),
    1: ((_T, _L),),
    2: ((_R, _T),),
    4: ((_L, _B),),
    8: ((_B, _R),),
    3: ((_R, _L),),
    12: ((_L, _R),),
    5: ((_T, _B),),
    10: ((_B, _T),),
    7: ((_R, _B),),
    11: ((_B, _L),),
    13: ((_T, _R),),
    14: ((_L, _T),),
    9: ((_T, _L), (_B, _R)),
    6: ((_R, _T), (_L, _B)),
}


def _block_vertex(which: int, x0: int, y0: int):
    # doubled integer coordinates of an edge midpoint of the block whose
    # top-left pixel center is (x0, y0)
    if which == _T:
        return (2 * x0 + 1, 2 * y0)
    if which == _R:
        return (2 * x0 + 2, 2 * y0 + 1)
    if which == _B:
        return (2 * x0 + 1, 2 * y0 + 2)
    return (2 * x0, 2 * y0 + 1)


def _trace_crack_loops(mask: np.ndarray):
    padded = np.pad(mask, 1)
    code = (padded[:-1, :-1].astype(np.uint8)
            + 2 * padded[:-1, 1:]
            + 4 * padded[1:, :-1]
            + 8 * padded[1:, 1:])
    ci, cj = np.nonzero((code != 0) & (code != 15))
    succ = {}
    for i, j in zip(ci.tolist(), cj.tolist()):
        x0, y0 = j - 1, i - 1  # original coords of the block's TL pixel center
        for a, b in _CASES[int(code[i, j])]:
            succ[_block_vertex(a, x0, y0)] = _block_vertex(b, x0, y0)

    loops = []
    visited = set()
    for start in sorted(succ):
        if start in visited:
            continue
        loop = []
        v = start
        while True:
            loop.append(v)
            visited.add(v)
            v = succ[v]
            if v == start:
                break
        loops.append(np.asarray(loop, dtype=float) / 2.0)
    return loops


def resample_closed(points: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """Resample a closed polygon at uniform arc-length spacing close to
    ``spacing`` (the count is rounded so the samples tile the perimeter)."""
    pts = np.asarray(points, dtype=float)
    closed = np.vstack([pts, pts[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    perimeter = cum[-1]
    n = max(3, int(round(perimeter / spacing)))
    s = np.arange(n) * (perimeter / n)
    x = np.interp(s, cum, closed[:, 0])
    y = np.interp(s, cum, closed[:, 1])
    return np.stack([x, y], axis=1)


def extract_boundaries(img: BinaryImage) -> list[ClosedCurve]:
    """Decompose the foreground boundary into oriented closed curves.

    Returns one curve per boundary component, outer boundaries
    counter-clockwise and holes clockwise, resampled to about 1 px
    spacing.  Raises EmptySilhouetteError when there is no foreground.
    """
    if not img.mask.any():
        raise EmptySilhouetteError("empty silhouette: no foreground pixels")
    return [ClosedCurve.from_points(resample_closed(loop))
            for loop in _trace_crack_loops(img.mask)]
