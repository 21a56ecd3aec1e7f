import numpy as np
import pytest

from silvec.geometry import ClosedCurve


def circle_points(radius: float, center=(512.0, 512.0), spacing: float = 1.0):
    n = max(16, int(round(2.0 * np.pi * radius / spacing)))
    th = np.arange(n) * 2.0 * np.pi / n
    return np.stack([center[0] + radius * np.cos(th),
                     center[1] + radius * np.sin(th)], axis=1)


def square_points(side: float, center=(512.0, 512.0)):
    """Axis-aligned square traversed counter-clockwise at 1 px spacing,
    starting at the corner (cx - s/2, cy - s/2)."""
    half = side / 2.0
    cx, cy = center
    c0 = np.array([cx - half, cy - half])
    c1 = np.array([cx + half, cy - half])
    c2 = np.array([cx + half, cy + half])
    c3 = np.array([cx - half, cy + half])
    n = int(round(side))
    t = np.arange(n)[:, None] / n
    pts = np.vstack([c0 + t * (c1 - c0), c1 + t * (c2 - c1),
                     c2 + t * (c3 - c2), c3 + t * (c0 - c3)])
    return pts


def rect_points(width: int, height: int, origin=(0.0, 0.0)):
    """Axis-aligned rectangle perimeter at exact 1 px spacing, starting at
    ``origin`` and running along +x first."""
    ox, oy = origin
    top = [(ox + i, oy) for i in range(width)]
    right = [(ox + width, oy + i) for i in range(height)]
    bottom = [(ox + width - i, oy + height) for i in range(width)]
    left = [(ox, oy + height - i) for i in range(height)]
    return np.asarray(top + right + bottom + left, dtype=float)


def triangle_points(side: float, center=(512.0, 512.0)):
    h = side * np.sqrt(3.0) / 2.0
    cx, cy = center
    verts = [np.array([cx, cy - 2.0 * h / 3.0]),
             np.array([cx + side / 2.0, cy + h / 3.0]),
             np.array([cx - side / 2.0, cy + h / 3.0])]
    n = int(round(side))
    t = np.arange(n)[:, None] / n
    return np.vstack([verts[i] + t * (verts[(i + 1) % 3] - verts[i])
                      for i in range(3)])


def brute_distance(samples: np.ndarray, p) -> float:
    """Reference point-to-closed-polyline distance: plain scan of all edges."""
    a = np.asarray(samples)
    b = np.roll(a, -1, axis=0)
    d = b - a
    u = np.clip(((p - a) * d).sum(axis=1) / (d * d).sum(axis=1), 0.0, 1.0)
    proj = a + u[:, None] * d
    return float(np.hypot(*(p - proj).T).min())


@pytest.fixture(scope="session")
def circle_curve():
    return ClosedCurve.from_points(circle_points(300.0))


@pytest.fixture(scope="session")
def square_curve():
    return ClosedCurve.from_points(square_points(400.0))


@pytest.fixture(scope="session")
def triangle_curve():
    return ClosedCurve.from_points(triangle_points(450.0))
