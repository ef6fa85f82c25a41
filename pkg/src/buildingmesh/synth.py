"""Analytic test scenes: primitive solids ray-cast along an orbital path.

Renders exact depth, flat-shaded color, and a per-pixel mask of the
"building" (first primitive), and writes the on-disk layout that the fuse
and run commands consume: frames/NNN.png, depth/NNN.pfm, masks/NNN.png,
cameras.json. The geometry is closed-form, so rendered frames double as
oracles for the fusion and mask stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core.camera import project_points
from .core.io import (
    save_cameras_json,
    save_depth_pfm,
    save_image_png,
    save_mask_png,
)
from .core.types import (
    BinaryMask,
    CameraModel,
    DepthMap,
    ImageRGB,
    StructuringElement,
    TriangleMesh,
)
from .maskops import dilate, erode

_EPS_T = 1e-9  # smallest accepted ray parameter; rejects self-hits at origin


@dataclass(frozen=True)
class OrbitSpec:
    """Circular camera path: positions center + (R cos az, R sin az, altitude).

    tilt 0 points the optical axis straight down (-z); tilt 90 points it
    horizontally toward the orbit axis. The axis passes through `center`
    exactly when tan(tilt) = radius/altitude.
    """

    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 40.0
    altitude: float = 40.0
    tilt_deg: float = 45.0
    frames: int = 31
    width: int = 320
    height: int = 240
    fx: float = 300.0
    fy: float = 300.0
    cx: float | None = None
    cy: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if self.frames < 2:
            raise ValueError("need at least 2 frames")
        if not 0.0 <= self.tilt_deg <= 90.0:
            raise ValueError("tilt must be in [0, 90] degrees")
        if self.cx is None:
            object.__setattr__(self, "cx", self.width / 2.0)
        if self.cy is None:
            object.__setattr__(self, "cy", self.height / 2.0)


def orbit_cameras(spec: OrbitSpec) -> list[CameraModel]:
    tilt = math.radians(spec.tilt_deg)
    center = np.asarray(spec.center, dtype=np.float64)
    cams = []
    for k in range(spec.frames):
        az = 2.0 * math.pi * k / spec.frames
        pos = center + np.array(
            [spec.radius * math.cos(az), spec.radius * math.sin(az), spec.altitude]
        )
        z_cam = np.array(
            [
                -math.cos(az) * math.sin(tilt),
                -math.sin(az) * math.sin(tilt),
                -math.cos(tilt),
            ]
        )
        x_cam = np.array([-math.sin(az), math.cos(az), 0.0])
        y_cam = np.cross(z_cam, x_cam)
        m = np.eye(4)
        m[:3, 0] = x_cam
        m[:3, 1] = y_cam
        m[:3, 2] = z_cam
        m[:3, 3] = pos
        cams.append(
            CameraModel(
                spec.fx, spec.fy, spec.cx, spec.cy, spec.width, spec.height, m
            )
        )
    return cams


def _check_albedo(albedo):
    a = tuple(int(c) for c in albedo)
    if len(a) != 3 or any(not 0 <= c <= 255 for c in a):
        raise ValueError("albedo must be three 0..255 components")
    return a


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float
    albedo: tuple = (205, 92, 52)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3 or not all(map(math.isfinite, self.center)):
            raise ValueError("sphere center must be a finite 3-vector")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("sphere radius must be finite and > 0")
        object.__setattr__(self, "albedo", _check_albedo(self.albedo))


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    albedo: tuple = (180, 170, 150)

    def __post_init__(self):
        lo = tuple(float(c) for c in self.lo)
        hi = tuple(float(c) for c in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box corners must be 3-vectors")
        if not all(map(math.isfinite, lo + hi)):
            raise ValueError("box corners must be finite")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("box hi must exceed lo on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "albedo", _check_albedo(self.albedo))


@dataclass(frozen=True)
class HorizontalPlane:
    z: float
    albedo: tuple = (80, 120, 80)

    def __post_init__(self):
        if not math.isfinite(self.z):
            raise ValueError("plane height must be finite")
        object.__setattr__(self, "albedo", _check_albedo(self.albedo))


@dataclass(frozen=True)
class PrimitiveScene:
    """Primitive list; the first entry is the building (mask target)."""

    primitives: tuple

    def __post_init__(self):
        prims = tuple(self.primitives)
        if not prims:
            raise ValueError("scene needs at least one primitive")
        for p in prims:
            if not isinstance(p, (Sphere, Box, HorizontalPlane)):
                raise ValueError(f"unsupported primitive {type(p).__name__}")
        object.__setattr__(self, "primitives", prims)

    @property
    def building(self):
        return self.primitives[0]


def _intersect(prim, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Smallest ray parameter > 0 per pixel, +inf on miss.

    `dirs` are world-frame with unit camera-z component, so the parameter is
    the camera-frame depth directly.
    """
    miss = np.inf
    if isinstance(prim, Sphere):
        oc = origin - np.array(prim.center)
        a = np.sum(dirs * dirs, axis=-1)
        b = 2.0 * (dirs @ oc)
        c = float(oc @ oc) - prim.radius * prim.radius
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        t = np.where(t_near > _EPS_T, t_near, t_far)
        return np.where((disc >= 0.0) & (t > _EPS_T), t, miss)
    if isinstance(prim, Box):
        lo = np.array(prim.lo) - origin
        hi = np.array(prim.hi) - origin
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = lo / dirs
            tb = hi / dirs
        t_enter = np.fmax.reduce(np.fmin(ta, tb), axis=-1)
        t_exit = np.fmin.reduce(np.fmax(ta, tb), axis=-1)
        t = np.where(t_enter > _EPS_T, t_enter, t_exit)
        hit = (t_exit >= t_enter) & (t > _EPS_T)
        return np.where(hit, t, miss)
    if isinstance(prim, HorizontalPlane):
        dz = dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (prim.z - origin[2]) / dz
        return np.where(np.isfinite(t) & (t > _EPS_T), t, miss)
    raise ValueError(f"unsupported primitive {type(prim).__name__}")


def render(
    scene: PrimitiveScene, cam: CameraModel
) -> tuple[DepthMap, ImageRGB, BinaryMask]:
    """Exact per-pixel ray cast. Missed pixels get depth 0 (invalid), black
    color, mask false; ties go to the earlier-listed primitive."""
    us, vs = np.meshgrid(
        np.arange(cam.width, dtype=np.float64),
        np.arange(cam.height, dtype=np.float64),
    )
    dx = (us + 0.5 - cam.cx) / cam.fx
    dy = (vs + 0.5 - cam.cy) / cam.fy
    dirs_cam = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    dirs = dirs_cam @ cam.rotation.T
    origin = cam.translation

    best = np.full((cam.height, cam.width), np.inf)
    winner = np.full((cam.height, cam.width), -1, dtype=np.int64)
    for idx, prim in enumerate(scene.primitives):
        t = _intersect(prim, origin, dirs)
        closer = t < best
        best[closer] = t[closer]
        winner[closer] = idx

    hit = winner >= 0
    depth = np.where(hit, best, 0.0).astype(np.float32)
    palette = np.array(
        [(0, 0, 0)] + [p.albedo for p in scene.primitives], dtype=np.uint8
    )
    color = palette[winner + 1]
    return DepthMap(depth), ImageRGB(color), BinaryMask(winner == 0)


def render_mesh_silhouette(mesh: TriangleMesh, cam: CameraModel) -> BinaryMask:
    """Rasterize the mesh's coverage mask (no shading, no z-buffer).

    Triangles with any vertex at or behind the camera plane are skipped —
    fine for orbit views that keep the object fully in front.
    """
    bits = np.zeros((cam.height, cam.width), dtype=bool)
    if len(mesh.triangles) == 0:
        return BinaryMask(bits)
    u, v, z = project_points(cam, mesh.vertices)
    tris = mesh.triangles
    front = z[tris].min(axis=1) > _EPS_T
    tu = u[tris[front]]
    tv = v[tris[front]]
    area = (tu[:, 1] - tu[:, 0]) * (tv[:, 2] - tv[:, 0]) - (
        tu[:, 2] - tu[:, 0]
    ) * (tv[:, 1] - tv[:, 0])
    keep = np.abs(area) >= 1e-12
    tu, tv, area = tu[keep], tv[keep], area[keep]
    if len(tu) == 0:
        return BinaryMask(bits)

    # clipped integer bbox per triangle, pixel centers at +0.5
    x0 = np.maximum(np.floor(tu.min(axis=1) - 0.5).astype(np.int64), 0)
    x1 = np.minimum(np.ceil(tu.max(axis=1) - 0.5).astype(np.int64) + 1, cam.width)
    y0 = np.maximum(np.floor(tv.min(axis=1) - 0.5).astype(np.int64), 0)
    y1 = np.minimum(np.ceil(tv.max(axis=1) - 0.5).astype(np.int64) + 1, cam.height)
    bw = x1 - x0
    bh = y1 - y0
    keep = (bw > 0) & (bh > 0)
    tu, tv, area, x0, y0, bw, bh = (
        a[keep] for a in (tu, tv, area, x0, y0, bw, bh)
    )
    sgn = np.where(area > 0.0, 1.0, -1.0)

    # Batch triangles whose bboxes have the same size so the three edge
    # tests run as one broadcast per batch instead of a per-triangle loop.
    flat = bits.reshape(-1)
    sizes = np.stack([bw, bh], axis=1)
    uniq, inv = np.unique(sizes, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(inv, kind="stable")
    starts = np.searchsorted(inv[order], np.arange(len(uniq)))
    stops = np.append(starts[1:], len(order))
    for g, (gw, gh) in enumerate(uniq):
        idx_all = order[starts[g] : stops[g]]
        step = max(1, (1 << 21) // int(gw * gh))
        for s in range(0, len(idx_all), step):
            idx = idx_all[s : s + step]
            px = x0[idx, None, None] + np.arange(gw)[None, None, :] + 0.5
            py = y0[idx, None, None] + np.arange(gh)[None, :, None] + 0.5
            ua, ub, uc = (tu[idx, k, None, None] for k in range(3))
            va, vb, vc = (tv[idx, k, None, None] for k in range(3))
            sg = sgn[idx, None, None]
            e0 = ((ub - ua) * (py - va) - (vb - va) * (px - ua)) * sg
            e1 = ((uc - ub) * (py - vb) - (vc - vb) * (px - ub)) * sg
            e2 = ((ua - uc) * (py - vc) - (va - vc) * (px - uc)) * sg
            cov = (e0 >= 0.0) & (e1 >= 0.0) & (e2 >= 0.0)
            lin = ((py - 0.5) * cam.width + (px - 0.5)).astype(np.int64)
            flat[lin[cov]] = True
    return BinaryMask(bits)


def corrupt_mask(mask: BinaryMask, rng: np.random.Generator) -> BinaryMask:
    """Damage a clean mask the way sloppy segmentation does: punch a 2x2
    interior hole and sprinkle small specks well clear of the object."""
    el = StructuringElement.square(1)
    interior = erode(mask, el, iterations=3).bits
    inner = np.argwhere(interior)
    if len(inner) == 0:
        raise ValueError("mask too thin to corrupt")
    bits = mask.bits.copy()
    y, x = inner[rng.integers(len(inner))]
    bits[y : y + 2, x : x + 2] = False

    far = ~dilate(mask, el, iterations=8).bits
    far[:2, :] = far[-3:, :] = far[:, :2] = far[:, -3:] = False
    spots = np.argwhere(far)
    if len(spots) == 0:
        raise ValueError("no room for specks")
    placed = []
    for size in (1, 1, 2):
        for _ in range(100):
            sy, sx = spots[rng.integers(len(spots))]
            if all(abs(sy - py) > 4 or abs(sx - px) > 4 for py, px in placed):
                bits[sy : sy + size, sx : sx + size] = True
                placed.append((sy, sx))
                break
    return BinaryMask(bits)


def make_scene_dir(
    scene: PrimitiveScene,
    spec: OrbitSpec,
    out_dir,
    corrupt_seed: int | None = None,
) -> Path:
    """Render the orbit and write the scene layout; returns the directory.

    With `corrupt_seed`, masks/ holds damaged masks and masks_clean/ the
    rendered ground truth (the mask-refinement demo fixture).
    """
    out = Path(out_dir)
    for sub in ("frames", "depth", "masks"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = None
    if corrupt_seed is not None:
        (out / "masks_clean").mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(corrupt_seed)
    cams = orbit_cameras(spec)
    for k, cam in enumerate(cams):
        depth, color, mask = render(scene, cam)
        name = f"{k:03d}"
        save_image_png(color, out / "frames" / f"{name}.png")
        save_depth_pfm(depth, out / "depth" / f"{name}.pfm")
        if rng is None:
            save_mask_png(mask, out / "masks" / f"{name}.png")
        else:
            save_mask_png(mask, out / "masks_clean" / f"{name}.png")
            save_mask_png(corrupt_mask(mask, rng), out / "masks" / f"{name}.png")
    save_cameras_json(cams, out / "cameras.json")
    return out


def sphere_scene() -> PrimitiveScene:
    """Floating 5 m sphere over low ground; the simplest fusion oracle."""
    return PrimitiveScene(
        (
            Sphere((0.0, 0.0, 0.0), 5.0),
            HorizontalPlane(-8.0),
        )
    )


def box_scene() -> PrimitiveScene:
    """10x10x20 m tower on the ground plane."""
    return PrimitiveScene(
        (
            Box((-5.0, -5.0, 0.0), (5.0, 5.0, 20.0)),
            HorizontalPlane(0.0),
        )
    )


def default_orbit(kind: str, **overrides) -> OrbitSpec:
    """Fixture orbit for a named scene; tilt/radius/frames may be overridden.

    Altitude follows tan(tilt) = radius/altitude so the optical axis passes
    through the scene center (nadir orbits fall back to altitude = radius).
    """
    if kind == "sphere":
        base = dict(center=(0.0, 0.0, 0.0), radius=40.0)
    elif kind in ("box", "noisy-mask"):
        base = dict(center=(0.0, 0.0, 10.0), radius=60.0)
    else:
        raise ValueError(f"unknown scene kind {kind!r}")
    base.update(overrides)
    if "altitude" not in base:
        tilt = base.get("tilt_deg", 45.0)
        radius = base["radius"]
        if tilt <= 0.0:
            base["altitude"] = radius
        else:
            base["altitude"] = radius / math.tan(math.radians(tilt))
    return OrbitSpec(**base)
