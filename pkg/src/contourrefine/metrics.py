"""Evaluation metrics: symmetric 3D Chamfer distance between surface
samples (CD-l2, lower is better) and pixel-wise normal consistency between
rendered normal maps (NC, higher is better).

CD-l2 is reported raw in squared object units; tables usually show it
scaled by 1e3. NC is the mean dot product over pixels covered by both
renders, commonly scaled by 100.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .camera import Camera
from .errors import InputError
from .mesh import Mesh
from .raster import rasterize

DEFAULT_SAMPLES = 10000


def sample_surface(mesh: Mesh, n: int = DEFAULT_SAMPLES, seed: int = 0) -> np.ndarray:
    """Area-weighted uniform surface samples, (n, 3). Deterministic per seed."""
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise InputError("sample_surface: mesh has zero surface area")
    rng = np.random.default_rng(seed)
    faces = rng.choice(mesh.n_faces, size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.vertices[mesh.faces[faces]]
    return (
        (1.0 - u - v)[:, None] * tri[:, 0]
        + u[:, None] * tri[:, 1]
        + v[:, None] * tri[:, 2]
    )


def chamfer_3d(
    a: Mesh, b: Mesh, n: int = DEFAULT_SAMPLES, seeds: tuple[int, int] = (0, 1)
) -> float:
    """Symmetric mean squared nearest-neighbor distance between n-point
    surface samples of each mesh. ``seeds`` fixes the sample per argument
    position, so swapping meshes along with their seeds gives the same value.
    """
    pa = sample_surface(a, n, seeds[0])
    pb = sample_surface(b, n, seeds[1])
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float((d_ab ** 2).mean() + (d_ba ** 2).mean())


def default_eval_cameras(camera: Camera):
    """The sample's input view plus three fixed azimuth offsets."""
    offsets = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)
    return [
        Camera(
            azimuth=camera.azimuth + off,
            elevation=camera.elevation,
            distance=camera.distance,
            focal=camera.focal,
            width=camera.width,
            height=camera.height,
        )
        for off in offsets
    ]


def normal_consistency(a: Mesh, b: Mesh, cameras) -> float:
    """Mean pixel-wise dot product between rendered normal maps, averaged
    over cameras and over pixels covered by both renders. In [-1, 1]."""
    cameras = list(cameras)
    if not cameras:
        raise InputError("normal_consistency: need at least one camera")
    values = []
    for cam in cameras:
        ra = rasterize(a, cam)
        rb = rasterize(b, cam)
        joint = ra.mask.astype(bool) & rb.mask.astype(bool)
        if not joint.any():
            continue
        dots = (ra.normals[joint] * rb.normals[joint]).sum(axis=1)
        values.append(dots.mean())
    if not values:
        raise InputError("normal_consistency: no jointly covered pixels")
    return float(np.mean(values))
