"""Masked TSDF fusion of posed depth frames and marching-cubes extraction.

Depth maps are integrated into a dense voxel grid holding a truncated signed
distance (normalized to [-1, 1] by the truncation band), an observation
weight, and an RGB accumulator. The projective distance d(u, v) - z_cam
stands in for the true point-to-surface distance, as usual for TSDF fusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core.camera import backproject_pixels
from .core.types import BinaryMask, CameraModel, DepthMap, ImageRGB, TriangleMesh
from .mc_tables import CORNERS_OF_EDGE, CORNER_OFFSETS, EDGE_TABLE, TRI_TABLE

# Dense storage: keeps the whole pipeline auditable. Desk-scale grids only.
MAX_VOXELS = 512 ** 3

# Voxels processed per projection batch; bounds peak memory, not results.
_CHUNK_VOXELS = 1 << 22

FrameTuple = tuple[DepthMap, "ImageRGB | None", "BinaryMask | None", CameraModel]


@dataclass(frozen=True)
class FusionParams:
    voxel_size: float
    truncation: float | None = None  # None -> 4 * voxel_size
    max_depth: float = math.inf
    use_mask: bool = True

    def __post_init__(self):
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be > 0")
        if self.truncation is None:
            object.__setattr__(self, "truncation", 4.0 * self.voxel_size)
        if self.truncation < self.voxel_size:
            raise ValueError("truncation must be >= voxel_size")
        if not self.max_depth > 0:
            raise ValueError("max_depth must be > 0")


class TsdfVolume:
    """Axis-aligned voxel grid; ``origin`` is the corner of voxel (0,0,0).

    Unobserved voxels keep the sentinel pair tsdf=1.0, weight=0.
    """

    def __init__(self, origin, voxel_size: float, dims):
        origin = np.asarray(origin, dtype=np.float64)
        if origin.shape != (3,):
            raise ValueError("origin must be a 3-vector")
        if not voxel_size > 0:
            raise ValueError("voxel_size must be > 0")
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError("dims must be three positive counts")
        n = dims[0] * dims[1] * dims[2]
        if n > MAX_VOXELS:
            raise ValueError(f"voxel count {n} exceeds cap {MAX_VOXELS}")
        self.origin = origin
        self.voxel_size = float(voxel_size)
        self.dims = dims
        self.tsdf = np.ones(dims, dtype=np.float32)
        self.weight = np.zeros(dims, dtype=np.float32)
        self.color = np.zeros(dims + (3,), dtype=np.float32)

    @classmethod
    def from_bounds(cls, lo, hi, voxel_size: float) -> "TsdfVolume":
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("bounds must be 3-vectors")
        if np.any(hi <= lo):
            raise ValueError("upper bound must exceed lower bound on every axis")
        dims = np.maximum(np.ceil((hi - lo) / voxel_size).astype(int), 1)
        return cls(lo, voxel_size, tuple(dims))

    def voxel_centers(self, ix, iy, iz) -> np.ndarray:
        """World-space centers for (broadcastable) integer voxel indices."""
        idx = np.stack(np.broadcast_arrays(ix, iy, iz), axis=-1).astype(np.float64)
        return self.origin + (idx + 0.5) * self.voxel_size


def integrate(
    volume: TsdfVolume,
    depth: DepthMap,
    color: ImageRGB | None,
    mask: BinaryMask | None,
    cam: CameraModel,
    params: FusionParams,
) -> TsdfVolume:
    """Fuse one posed frame into ``volume`` (updated in place and returned)."""
    if depth.depth.shape != (cam.height, cam.width):
        raise ValueError("depth dimensions disagree with camera")
    if color is not None and color.data.shape[:2] != (cam.height, cam.width):
        raise ValueError("color dimensions disagree with camera")
    if mask is not None and mask.bits.shape != (cam.height, cam.width):
        raise ValueError("mask dimensions disagree with camera")

    trunc = params.truncation
    rot = cam.rotation  # camera -> world; transpose maps world -> camera
    trans = cam.translation
    d_img = depth.depth
    d_ok = depth.validity()
    if math.isfinite(params.max_depth):
        d_ok = d_ok & (d_img <= params.max_depth)
    if params.use_mask and mask is not None:
        d_ok = d_ok & mask.bits
    rgb = None
    if color is not None:
        rgb = color.data.astype(np.float32) / 255.0

    nx, ny, nz = volume.dims
    t_flat = volume.tsdf.reshape(-1)
    w_flat = volume.weight.reshape(-1)
    c_flat = volume.color.reshape(-1, 3)
    # x-slabs of a C-ordered grid are contiguous flat ranges
    slab = max(1, _CHUNK_VOXELS // max(1, ny * nz))

    iy, iz = np.meshgrid(np.arange(ny), np.arange(nz), indexing="ij")
    for x0 in range(0, nx, slab):
        x1 = min(x0 + slab, nx)
        ix = np.arange(x0, x1)[:, None, None]
        centers = volume.voxel_centers(ix, iy[None], iz[None]).reshape(-1, 3)
        p_cam = (centers - trans) @ rot
        z = p_cam[:, 2]
        sel = np.flatnonzero(z > 0.0)
        if sel.size == 0:
            continue
        zs = z[sel]
        u = cam.fx * p_cam[sel, 0] / zs + cam.cx
        v = cam.fy * p_cam[sel, 1] / zs + cam.cy
        inb = (u >= 0.0) & (u < cam.width) & (v >= 0.0) & (v < cam.height)
        sel, zs, u, v = sel[inb], zs[inb], u[inb], v[inb]
        if sel.size == 0:
            continue
        iu = np.floor(u).astype(np.intp)
        iv = np.floor(v).astype(np.intp)
        usable = d_ok[iv, iu]
        sel, zs, iu, iv = sel[usable], zs[usable], iu[usable], iv[usable]
        if sel.size == 0:
            continue
        sdf_raw = d_img[iv, iu].astype(np.float64) - zs
        keep = sdf_raw >= -trunc
        sel, sdf_raw, iu, iv = sel[keep], sdf_raw[keep], iu[keep], iv[keep]
        if sel.size == 0:
            continue
        obs = np.clip(sdf_raw / trunc, -1.0, 1.0).astype(np.float32)

        flat = x0 * ny * nz + sel
        w_old = w_flat[flat]
        w_new = w_old + 1.0
        t_flat[flat] = (t_flat[flat] * w_old + obs) / w_new
        if rgb is not None:
            near = np.abs(sdf_raw) <= trunc
            nf = flat[near]
            wn = w_old[near][:, None]
            px = rgb[iv[near], iu[near]]
            c_flat[nf] = (c_flat[nf] * wn + px) / (wn + 1.0)
        w_flat[flat] = w_new
    return volume


def point_bounds(
    frames: list[FrameTuple], *, use_mask: bool = True, max_depth: float = math.inf
) -> tuple[np.ndarray, np.ndarray]:
    """Unpadded AABB of all valid (optionally masked) back-projected pixels."""
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for depth, _color, mask, cam in frames:
        valid = depth.validity()
        if math.isfinite(max_depth):
            valid = valid & (depth.depth <= max_depth)
        if use_mask and mask is not None:
            valid = valid & mask.bits
        vs, us = np.nonzero(valid)
        if vs.size == 0:
            continue
        pts = backproject_pixels(cam, us, vs, depth.depth[vs, us])
        np.minimum(lo, pts.min(axis=0), out=lo)
        np.maximum(hi, pts.max(axis=0), out=hi)
    if not np.all(np.isfinite(lo)):
        raise ValueError("no valid depth samples to derive bounds from")
    return lo, hi


def derive_bounds(
    frames: list[FrameTuple], params: FusionParams
) -> tuple[np.ndarray, np.ndarray]:
    """Point AABB padded by 5% of its extent plus the truncation band."""
    lo, hi = point_bounds(frames, use_mask=params.use_mask, max_depth=params.max_depth)
    pad = 0.05 * (hi - lo) + params.truncation
    return lo - pad, hi + pad


def integrate_sequence(
    frames: list[FrameTuple],
    params: FusionParams,
    bounds: "tuple[np.ndarray, np.ndarray] | None" = None,
) -> TsdfVolume:
    if not frames:
        raise ValueError("need at least one frame")
    if bounds is None:
        bounds = derive_bounds(frames, params)
    volume = TsdfVolume.from_bounds(bounds[0], bounds[1], params.voxel_size)
    for depth, color, mask, cam in frames:
        integrate(volume, depth, color, mask, cam, params)
    return volume


_EDGE_BASE = np.array(
    [
        [
            min(CORNER_OFFSETS[a][ax], CORNER_OFFSETS[b][ax])
            for ax in range(3)
        ]
        for a, b in CORNERS_OF_EDGE
    ],
    dtype=np.intp,
)
_EDGE_AXIS = np.array(
    [
        next(
            ax
            for ax in range(3)
            if CORNER_OFFSETS[a][ax] != CORNER_OFFSETS[b][ax]
        )
        for a, b in CORNERS_OF_EDGE
    ],
    dtype=np.intp,
)
_EDGE_TABLE_NP = np.array(EDGE_TABLE, dtype=np.int32)


def marching_cubes(volume: TsdfVolume) -> TriangleMesh:
    """Extract the tsdf = 0 isosurface over fully observed cubes.

    A corner counts inside iff tsdf < 0; winding puts outward normals toward
    tsdf > 0. Vertices on shared cube edges are emitted once.
    """
    nx, ny, nz = volume.dims
    empty = TriangleMesh(
        np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32), np.zeros((0, 3))
    )
    if nx < 2 or ny < 2 or nz < 2:
        return empty

    tsdf = volume.tsdf
    observed = volume.weight > 0.0
    inside = (tsdf < 0.0) & observed

    def corner_view(arr, off):
        ox, oy, oz = off
        return arr[ox : ox + nx - 1, oy : oy + ny - 1, oz : oz + nz - 1]

    cube_ok = np.ones((nx - 1, ny - 1, nz - 1), dtype=bool)
    case = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    for bit, off in enumerate(CORNER_OFFSETS):
        cube_ok &= corner_view(observed, off)
        case |= corner_view(inside, off).astype(np.int32) << bit
    edge_bits = np.where(cube_ok, _EDGE_TABLE_NP[case], 0)
    ci, cj, ck = np.nonzero(edge_bits)
    if ci.size == 0:
        return empty
    bits = edge_bits[ci, cj, ck]
    cases = case[ci, cj, ck]

    # Dedup shared vertices by (edge min-corner grid index, edge axis).
    key_rows = []
    pair_rows = []  # (active-cube row, edge id) per crossed edge
    for e in range(12):
        hit = np.flatnonzero(bits & (1 << e))
        if hit.size == 0:
            continue
        bx = ci[hit] + _EDGE_BASE[e, 0]
        by = cj[hit] + _EDGE_BASE[e, 1]
        bz = ck[hit] + _EDGE_BASE[e, 2]
        key_rows.append(((bx * ny + by) * nz + bz) * 3 + _EDGE_AXIS[e])
        pair_rows.append((hit, e))
    keys = np.concatenate(key_rows)
    uniq, inv = np.unique(keys, return_inverse=True)

    vmap = np.full((ci.size, 12), -1, dtype=np.int64)
    pos = 0
    for hit, e in pair_rows:
        vmap[hit, e] = inv[pos : pos + hit.size]
        pos += hit.size

    axis = uniq % 3
    rest = uniq // 3
    bz = rest % nz
    rest //= nz
    by = rest % ny
    bx = rest // ny
    ex = bx + (axis == 0)
    ey = by + (axis == 1)
    ez = bz + (axis == 2)
    va = tsdf[bx, by, bz].astype(np.float64)
    vb = tsdf[ex, ey, ez].astype(np.float64)
    t = va / (va - vb)
    base = np.stack([bx, by, bz], axis=1).astype(np.float64)
    unit = np.eye(3)[axis]
    verts = volume.origin + (base + 0.5 + t[:, None] * unit) * volume.voxel_size
    ca = volume.color[bx, by, bz].astype(np.float64)
    cb = volume.color[ex, ey, ez].astype(np.float64)
    colors = np.clip(ca + t[:, None] * (cb - ca), 0.0, 1.0)

    tri_parts = []
    for cs in np.unique(cases):
        rows = np.flatnonzero(cases == cs)
        table = np.array(TRI_TABLE[cs], dtype=np.int64).reshape(-1, 3)
        tris = vmap[rows][:, table].reshape(-1, 3)
        tri_parts.append(tris)
    tris = np.concatenate(tri_parts)
    # table winding orients normals toward tsdf < 0; flip for outward
    tris = tris[:, [0, 2, 1]].astype(np.int32)
    return TriangleMesh(verts, tris, colors)
