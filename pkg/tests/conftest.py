"""Shared fixtures.

The sphere reconstruction takes ~10 s, so it is built once per session and
shared between the fusion tests and the acceptance gate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

import buildingmesh as bm

SPHERE_RADIUS = 5.0

# 31 cameras on an equatorial ring; the long focal length makes the 5 m
# sphere fill about two thirds of the 300x300 frame from 100 m away.
SPHERE_ORBIT = bm.OrbitSpec(
    center=(0.0, 0.0, 0.0),
    radius=100.0,
    altitude=0.0,
    tilt_deg=90.0,
    frames=31,
    width=300,
    height=300,
    fx=2000.0,
    fy=2000.0,
)


def sphere_backstop_scene() -> bm.PrimitiveScene:
    """Sphere between two horizontal backstop planes.

    The planes guarantee that every ray of every view returns a valid depth
    (equatorial rays that miss the sphere always climb or dive into a plane),
    so no near-surface voxel is left unobserved. The fusion bounds stop well
    short of the planes themselves.
    """
    return bm.PrimitiveScene(
        (
            bm.Sphere((0.0, 0.0, 0.0), SPHERE_RADIUS),
            bm.HorizontalPlane(-12.0),
            bm.HorizontalPlane(12.0),
        )
    )


def render_orbit(scene: bm.PrimitiveScene, spec: bm.OrbitSpec):
    """(depth, color, mask, camera) fusion tuples for every orbit view."""
    frames = []
    for cam in bm.orbit_cameras(spec):
        depth, color, mask = bm.render(scene, cam)
        frames.append((depth, color, mask, cam))
    return frames


@dataclass
class SphereRecon:
    radius: float
    params: bm.FusionParams
    bounds: tuple
    frames: list
    cams: list
    volume: bm.TsdfVolume
    raw_mesh: bm.TriangleMesh
    mesh: bm.TriangleMesh  # after clean_mesh
    seconds: float  # fuse + extract + clean


@pytest.fixture(scope="session")
def sphere_recon() -> SphereRecon:
    """Fuse the backstop sphere scene at voxel 0.1 on a 128^3 grid."""
    scene = sphere_backstop_scene()
    frames = render_orbit(scene, SPHERE_ORBIT)
    params = bm.FusionParams(voxel_size=0.1, truncation=1.6, use_mask=False)
    bounds = (np.full(3, -6.4), np.full(3, 6.4))
    t0 = time.perf_counter()
    volume = bm.integrate_sequence(frames, params, bounds=bounds)
    raw_mesh = bm.marching_cubes(volume)
    mesh = bm.clean_mesh(raw_mesh)
    seconds = time.perf_counter() - t0
    assert volume.dims == (128, 128, 128)
    return SphereRecon(
        SPHERE_RADIUS,
        params,
        bounds,
        frames,
        [f[3] for f in frames],
        volume,
        raw_mesh,
        mesh,
        seconds,
    )


@pytest.fixture(scope="session")
def box_scene_dir(tmp_path_factory):
    """Small box scene on disk: frames/, depth/, masks/, cameras.json."""
    spec = bm.default_orbit("box", frames=5, width=96, height=72, fx=90.0, fy=90.0)
    out = tmp_path_factory.mktemp("scenes") / "box"
    return bm.make_scene_dir(bm.box_scene(), spec, out)
