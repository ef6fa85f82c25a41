"""Pinhole projection and back-projection.

Pixel (u, v) covers the unit square [u, u+1) x [v, v+1); its center sits at
(u + 0.5, v + 0.5). Rays and projections both use that convention, so
project(origin + t * direction) recovers the pixel center exactly.
"""

from __future__ import annotations

import numpy as np

from .types import CameraModel


def pixel_to_ray(cam: CameraModel, u: float, v: float) -> tuple[np.ndarray, np.ndarray]:
    """World-space ray through the center of pixel (u, v).

    Returns (origin, direction) with direction normalized. Raises ValueError
    for pixels outside the image.
    """
    if not (0 <= u < cam.width and 0 <= v < cam.height):
        raise ValueError(f"pixel ({u}, {v}) outside {cam.width}x{cam.height} image")
    d_cam = np.array(
        [(u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0]
    )
    d_cam /= np.linalg.norm(d_cam)
    direction = cam.rotation @ d_cam
    return cam.translation.copy(), direction


def project(cam: CameraModel, point: np.ndarray) -> tuple[float, float, float]:
    """Project a world point to continuous pixel coordinates (u, v, z_cam).

    z_cam <= 0 means the point lies behind (or on) the camera plane; u and v
    are NaN in the degenerate z_cam == 0 case.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    p_cam = cam.rotation.T @ (p - cam.translation)
    z = float(p_cam[2])
    if z == 0.0:
        return float("nan"), float("nan"), 0.0
    u = cam.fx * p_cam[0] / z + cam.cx
    v = cam.fy * p_cam[1] / z + cam.cy
    return float(u), float(v), z


def project_points(cam: CameraModel, points: np.ndarray):
    """Vectorized project() for an (n, 3) array. Returns (u, v, z) arrays.

    No bounds checks; entries with z <= 0 carry whatever the division gave
    and must be filtered by the caller.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    p_cam = (pts - cam.translation) @ cam.rotation
    z = p_cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * p_cam[:, 0] / z + cam.cx
        v = cam.fy * p_cam[:, 1] / z + cam.cy
    return u, v, z


def backproject_pixels(
    cam: CameraModel, us: np.ndarray, vs: np.ndarray, depths: np.ndarray
) -> np.ndarray:
    """World points for pixel indices (us, vs) at camera depth `depths`.

    Uses pixel centers, so it is the exact inverse of project() on the
    returned points.
    """
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    z = np.asarray(depths, dtype=np.float64)
    x = (us + 0.5 - cam.cx) / cam.fx * z
    y = (vs + 0.5 - cam.cy) / cam.fy * z
    p_cam = np.stack([x, y, z], axis=-1)
    return p_cam @ cam.rotation.T + cam.translation


def pixel_ray_grid(cam: CameraModel) -> np.ndarray:
    """Normalized camera-frame directions through every pixel center,
    shape (height, width, 3). Rotate by cam.rotation for world rays."""
    us = np.arange(cam.width, dtype=np.float64) + 0.5
    vs = np.arange(cam.height, dtype=np.float64) + 0.5
    x = (us[None, :] - cam.cx) / cam.fx
    y = (vs[:, None] - cam.cy) / cam.fy
    d = np.empty((cam.height, cam.width, 3))
    d[:, :, 0] = x
    d[:, :, 1] = y
    d[:, :, 2] = 1.0
    d /= np.linalg.norm(d, axis=2, keepdims=True)
    return d
