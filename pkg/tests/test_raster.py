import numpy as np
import pytest
from PIL import Image

from silvec.raster import (BinaryImage, EmptySilhouetteError,
                           extract_boundaries, load_binary, resample_closed)


def signed_area(samples: np.ndarray) -> float:
    x = samples[:, 0]
    y = samples[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def crack_edge_components(mask: np.ndarray) -> int:
    """Reference count of boundary components: union-find over the crack
    segments between foreground pixels and their 4-neighbors."""
    padded = np.pad(mask, 1)
    edges = []
    h, w = padded.shape
    for r in range(h):
        for c in range(w):
            if not padded[r, c]:
                continue
            # crack between (r, c) and each background 4-neighbor, as a
            # unit segment given by its two endpoint vertices
            x, y = c - 1, r - 1
            if not padded[r - 1, c]:
                edges.append(((2 * x - 1, 2 * y - 1), (2 * x + 1, 2 * y - 1)))
            if not padded[r + 1, c]:
                edges.append(((2 * x - 1, 2 * y + 1), (2 * x + 1, 2 * y + 1)))
            if not padded[r, c - 1]:
                edges.append(((2 * x - 1, 2 * y - 1), (2 * x - 1, 2 * y + 1)))
            if not padded[r, c + 1]:
                edges.append(((2 * x + 1, 2 * y - 1), (2 * x + 1, 2 * y + 1)))
    parent = {}

    def find(v):
        parent.setdefault(v, v)
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(a) for a, _ in edges})


def disk_mask(size, radius, center):
    y, x = np.mgrid[0:size, 0:size]
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius**2


class TestLoadBinary:
    def _write(self, tmp_path, arr, name="img.png"):
        path = tmp_path / name
        Image.fromarray(arr.astype(np.uint8), mode="L").save(path)
        return path

    def test_all_white_is_empty(self, tmp_path):
        img = load_binary(self._write(tmp_path, np.full((8, 8), 255)), 128)
        assert not img.mask.any()

    def test_all_black_is_full(self, tmp_path):
        img = load_binary(self._write(tmp_path, np.zeros((8, 8))), 128)
        assert img.mask.all()

    def test_checkerboard(self, tmp_path):
        arr = np.array([[0, 255], [255, 0]])
        img = load_binary(self._write(tmp_path, arr), 128)
        assert img.mask.sum() == 2

    def test_invert(self, tmp_path):
        arr = np.array([[0, 255], [255, 0]])
        img = load_binary(self._write(tmp_path, arr), 128, invert=True)
        assert img.mask.sum() == 2
        assert img.mask[0, 1] and img.mask[1, 0]

    def test_pgm(self, tmp_path):
        path = tmp_path / "img.pgm"
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(path)
        assert load_binary(path, 128).mask.all()

    def test_threshold_range(self, tmp_path):
        path = self._write(tmp_path, np.zeros((4, 4)))
        with pytest.raises(ValueError):
            load_binary(path, 300)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_binary(tmp_path / "missing.png")

    def test_dimensions(self, tmp_path):
        img = load_binary(self._write(tmp_path, np.zeros((6, 9))), 128)
        assert img.width == 9 and img.height == 6


class TestExtractBoundaries:
    def test_empty_mask_raises(self):
        with pytest.raises(EmptySilhouetteError):
            extract_boundaries(BinaryImage(mask=np.zeros((5, 5), dtype=bool)))

    def test_single_pixel(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 3] = True
        curves = extract_boundaries(BinaryImage(mask=mask))
        assert len(curves) == 1
        c = curves[0]
        # encloses the pixel center (x=3, y=2)
        assert signed_area(c.samples) > 0
        assert np.hypot(*(c.samples - [3, 2]).T).max() <= 0.75

    def test_disk_single_curve(self):
        mask = disk_mask(64, 20, (32, 32))
        curves = extract_boundaries(BinaryImage(mask=mask))
        assert len(curves) == 1
        assert len(curves[0].samples) >= 100

    def test_annulus_orientations(self):
        mask = disk_mask(64, 24, (32, 32)) & ~disk_mask(64, 10, (32, 32))
        curves = extract_boundaries(BinaryImage(mask=mask))
        assert len(curves) == 2
        areas = sorted(signed_area(c.samples) for c in curves)
        assert areas[0] < 0 < areas[1]
        assert abs(areas[1]) > abs(areas[0])

    def test_two_disks(self):
        mask = disk_mask(96, 12, (24, 48)) | disk_mask(96, 12, (72, 48))
        curves = extract_boundaries(BinaryImage(mask=mask))
        assert len(curves) == 2
        assert all(signed_area(c.samples) > 0 for c in curves)

    @pytest.mark.parametrize("builder", [
        lambda: disk_mask(64, 20, (32, 32)),
        lambda: disk_mask(64, 24, (32, 32)) & ~disk_mask(64, 10, (32, 32)),
        lambda: disk_mask(96, 12, (24, 48)) | disk_mask(96, 12, (72, 48)),
    ])
    def test_component_count_matches_crack_oracle(self, builder):
        mask = builder()
        curves = extract_boundaries(BinaryImage(mask=mask))
        assert len(curves) == crack_edge_components(mask)

    def test_curves_are_simple(self):
        rng = np.random.default_rng(9)
        mask = rng.random((24, 24)) < 0.35
        img = BinaryImage(mask=mask)
        for curve in extract_boundaries(img):
            pts = curve.samples
            n = len(pts)
            a = pts
            b = np.roll(pts, -1, axis=0)
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue  # adjacent through the closing edge
                    assert not _segments_cross(a[i], b[i], a[j], b[j])

    def test_area_close_to_pixel_count(self):
        mask = disk_mask(96, 30, (48, 48))
        curves = extract_boundaries(BinaryImage(mask=mask))
        area = sum(signed_area(c.samples) for c in curves)
        perimeter = sum(c.total_length for c in curves)
        assert abs(area - mask.sum()) <= 2 * perimeter

    def test_resampled_spacing(self):
        mask = disk_mask(96, 30, (48, 48)) & ~disk_mask(96, 9, (48, 48))
        for curve in extract_boundaries(BinaryImage(mask=mask)):
            closed = np.vstack([curve.samples, curve.samples[:1]])
            gaps = np.hypot(*np.diff(closed, axis=0).T)
            assert gaps.min() >= 0.5 and gaps.max() <= 1.5


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


class TestResample:
    def test_square_perimeter_preserved(self):
        pts = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
        out = resample_closed(pts)
        assert len(out) == 40
        closed = np.vstack([out, out[:1]])
        assert np.hypot(*np.diff(closed, axis=0).T).sum() == pytest.approx(
            40.0, rel=1e-3)
