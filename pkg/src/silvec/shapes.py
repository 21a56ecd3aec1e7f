"""Synthetic silhouette rasters used by the tests, docs and demos.

All generators return a boolean foreground mask on a square canvas
(1024 x 1024 by default); a pixel is foreground when its center lies
inside the analytic shape.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .raster import BinaryImage


def _grid(size: int):
    y, x = np.mgrid[0:size, 0:size]
    return x.astype(float), y.astype(float)


def disk(size: int = 1024, radius: float = 300.0, center=None) -> np.ndarray:
    if center is None:
        center = (size / 2.0, size / 2.0)
    x, y = _grid(size)
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius**2


def rounded_square(size: int = 1024, half: float = 280.0,
                   corner_radius: float = 90.0) -> np.ndarray:
    """Axis-aligned square with circular corner fillets."""
    x, y = _grid(size)
    cx = cy = size / 2.0
    qx = np.abs(x - cx) - (half - corner_radius)
    qy = np.abs(y - cy) - (half - corner_radius)
    outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
    return outside <= corner_radius


def star(size: int = 1024, points: int = 5, r_outer: float = 420.0,
         r_inner: float = 170.0) -> np.ndarray:
    """Pointed star polygon, first spike pointing up."""
    cx = cy = size / 2.0
    angles = -np.pi / 2.0 + np.arange(2 * points) * np.pi / points
    radii = np.where(np.arange(2 * points) % 2 == 0, r_outer, r_inner)
    vx = cx + radii * np.cos(angles)
    vy = cy + radii * np.sin(angles)
    x, y = _grid(size)
    inside = np.zeros(x.shape, dtype=bool)
    n = len(vx)
    for i in range(n):  # even-odd crossing test, vectorized per edge
        x1, y1 = vx[i], vy[i]
        x2, y2 = vx[(i + 1) % n], vy[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xi)
    return inside


def blob_with_hole(size: int = 1024) -> np.ndarray:
    """Wavy blob with an off-center circular hole."""
    cx = cy = size / 2.0
    x, y = _grid(size)
    dx = x - cx
    dy = y - cy
    rho = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    boundary = 300.0 + 45.0 * np.cos(3.0 * theta) + 25.0 * np.sin(5.0 * theta)
    blob = rho <= boundary
    hole = (x - (cx + 60.0)) ** 2 + (y - (cy - 40.0)) ** 2 <= 100.0**2
    return blob & ~hole


def to_image(mask: np.ndarray) -> BinaryImage:
    return BinaryImage(mask=np.asarray(mask, dtype=bool))


def save_png(mask: np.ndarray, path) -> None:
    """Write a mask as a dark-silhouette-on-white 8-bit PNG."""
    gray = np.where(np.asarray(mask, dtype=bool), 0, 255).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)
