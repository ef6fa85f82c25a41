"""Value types shared by every stage of the pipeline.

All types validate their invariants on construction and freeze their array
payloads (read-only numpy views), so instances can be shared across stages
without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """Malformed file content. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


def _frozen(data, dtype=None) -> np.ndarray:
    arr = np.array(data, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImageRGB:
    """8-bit interleaved RGB raster, shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"ImageRGB data must be (h, w, 3), got {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"ImageRGB data must be uint8, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("ImageRGB must be at least 1x1")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ImageGray:
    """Single-channel raster. Either 8-bit or real-valued, kept as given."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"ImageGray data must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("ImageGray must be at least 1x1")
        if arr.dtype == np.uint8:
            object.__setattr__(self, "data", _frozen(arr))
        else:
            object.__setattr__(self, "data", _frozen(arr, dtype=np.float64))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Boolean raster, shape (height, width). True marks foreground."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"BinaryMask bits must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("BinaryMask must be at least 1x1")
        object.__setattr__(self, "bits", _frozen(arr, dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class StructuringElement:
    """Morphology neighborhood given as (dx, dy) offsets.

    Must contain (0, 0) and be symmetric under negation, which makes
    dilation/erosion a dual pair.
    """

    offsets: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.offsets)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("offsets must be a non-empty (k, 2) array")
        arr = np.array(arr, dtype=np.int64)
        pairs = {(int(dx), int(dy)) for dx, dy in arr}
        if len(pairs) != arr.shape[0]:
            raise ValueError("offsets must be distinct")
        if (0, 0) not in pairs:
            raise ValueError("structuring element must contain (0, 0)")
        if {(-dx, -dy) for dx, dy in pairs} != pairs:
            raise ValueError("structuring element must be symmetric under negation")
        object.__setattr__(self, "offsets", _frozen(arr))

    @property
    def half_width(self) -> int:
        return int(np.abs(self.offsets[:, 0]).max())

    @property
    def half_height(self) -> int:
        return int(np.abs(self.offsets[:, 1]).max())

    @classmethod
    def square(cls, radius: int = 1) -> "StructuringElement":
        if radius < 0:
            raise ValueError("radius must be >= 0")
        span = range(-radius, radius + 1)
        return cls(np.array([(dx, dy) for dy in span for dx in span]))

    @classmethod
    def cross(cls, radius: int = 1) -> "StructuringElement":
        if radius < 0:
            raise ValueError("radius must be >= 0")
        offs = [(0, 0)]
        for r in range(1, radius + 1):
            offs += [(r, 0), (-r, 0), (0, r), (0, -r)]
        return cls(np.array(offs))


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel depth in meters, float32. Entries <= 0 or non-finite are
    invalid pixels; they are stored as-is and skipped by consumers."""

    depth: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.depth)
        if arr.ndim != 2:
            raise ValueError(f"DepthMap depth must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("DepthMap must be at least 1x1")
        object.__setattr__(self, "depth", _frozen(arr, dtype=np.float32))

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    def validity(self) -> np.ndarray:
        """Boolean map of pixels holding a usable depth."""
        return np.isfinite(self.depth) & (self.depth > 0)


_RIGID_TOL = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics plus a rigid camera-to-world transform.

    Camera frame: +z forward (optical axis), +x right, +y down in the image.
    world_from_camera is a 4x4 rigid transform whose rotation columns are the
    camera axes expressed in world coordinates.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_from_camera: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        m = np.array(self.world_from_camera, dtype=np.float64, copy=True)
        if m.shape != (4, 4):
            raise ValueError(f"world_from_camera must be 4x4, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=_RIGID_TOL, rtol=0):
            raise ValueError("world_from_camera last row must be (0, 0, 0, 1)")
        r = m[:3, :3]
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-6:
            raise ValueError("world_from_camera rotation is not orthonormal")
        if np.linalg.det(r) < 0:
            raise ValueError("world_from_camera rotation must be proper (det +1)")
        m.setflags(write=False)
        object.__setattr__(self, "world_from_camera", m)

    @property
    def rotation(self) -> np.ndarray:
        return self.world_from_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_from_camera[:3, 3]


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup with optional per-vertex colors in [0, 1]."""

    vertices: np.ndarray
    triangles: np.ndarray
    colors: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        c = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle indices out of range")
        if len(c) not in (0, len(v)):
            raise ValueError("colors must be empty or one per vertex")
        if len(c) and (c.min() < -1e-9 or c.max() > 1 + 1e-9):
            raise ValueError("colors must lie in [0, 1]")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "triangles", _frozen(t))
        object.__setattr__(self, "colors", _frozen(c))

    @property
    def has_colors(self) -> bool:
        return len(self.colors) == len(self.vertices) and len(self.vertices) > 0

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class Contour:
    """Polyline in pixel coordinates (x, y). Closed contours wrap implicitly
    (the last point connects back to the first; it is not repeated)."""

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if self.closed and len(pts) < 3:
            raise ValueError("closed contour needs at least 3 points")
        if not self.closed and len(pts) < 2:
            raise ValueError("open contour needs at least 2 points")
        if len(pts) > 1:
            seg = np.diff(pts, axis=0)
            if np.any((seg == 0).all(axis=1)):
                raise ValueError("consecutive contour points must be distinct")
        if self.closed and np.all(pts[-1] == pts[0]):
            raise ValueError("closed contour must not repeat its first point")
        object.__setattr__(self, "points", _frozen(pts))

    def perimeter(self) -> float:
        """Total polyline length, including the closing edge when closed."""
        pts = self.points
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
        if self.closed:
            seg += float(np.linalg.norm(pts[0] - pts[-1]))
        return float(seg)

    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise point order."""
        x = self.points[:, 0]
        y = self.points[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
