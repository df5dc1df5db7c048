"""Software rasterizer producing per-pixel coverage, depth, face and
barycentric buffers.

Pixel centers are point-sampled (no antialiasing) so the mask is a hard
binary raster. The z-buffer keeps the nearest face; depth ties keep the
lower face index, which makes output deterministic. Barycentric weights are
perspective correct, i.e. they are the weights of the 3D surface point seen
through the pixel center, so reconstructing ``a1*V1 + a2*V2 + a3*V3`` and
projecting lands back in that pixel.

Back faces are rasterized too; on a watertight mesh the z-buffer lets the
front surface win. Faces with a vertex at or behind the camera plane are
skipped (meshes are expected to sit fully in front of the camera).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .camera import Camera
from .mesh import Mesh


@njit(cache=True)
def _raster_kernel(verts, faces, focal, cx, cy, width, height):
    depth = np.full((height, width), np.inf)
    face_id = np.full((height, width), -1, dtype=np.int64)
    bary = np.zeros((height, width, 3))
    for f in range(faces.shape[0]):
        i0, i1, i2 = faces[f, 0], faces[f, 1], faces[f, 2]
        z0 = verts[i0, 2]
        z1 = verts[i1, 2]
        z2 = verts[i2, 2]
        if z0 <= 1e-9 or z1 <= 1e-9 or z2 <= 1e-9:
            continue
        u0 = focal * verts[i0, 0] / z0 + cx
        v0 = focal * verts[i0, 1] / z0 + cy
        u1 = focal * verts[i1, 0] / z1 + cx
        v1 = focal * verts[i1, 1] / z1 + cy
        u2 = focal * verts[i2, 0] / z2 + cx
        v2 = focal * verts[i2, 1] / z2 + cy

        area = (u1 - u0) * (v2 - v0) - (u2 - u0) * (v1 - v0)
        if abs(area) < 1e-12:
            continue

        umin = min(u0, min(u1, u2))
        umax = max(u0, max(u1, u2))
        vmin = min(v0, min(v1, v2))
        vmax = max(v0, max(v1, v2))
        # pixel centers are at integer + 0.5
        jlo = max(0, int(np.ceil(umin - 0.5)))
        jhi = min(width - 1, int(np.floor(umax - 0.5)))
        ilo = max(0, int(np.ceil(vmin - 0.5)))
        ihi = min(height - 1, int(np.floor(vmax - 0.5)))
        if jlo > jhi or ilo > ihi:
            continue

        inv0 = 1.0 / z0
        inv1 = 1.0 / z1
        inv2 = 1.0 / z2
        # slightly inclusive coverage so pixel centers that land exactly on a
        # shared edge are claimed by both faces instead of neither
        eps = -1e-8
        for i in range(ilo, ihi + 1):
            py = i + 0.5
            for j in range(jlo, jhi + 1):
                px = j + 0.5
                w0 = ((v1 - v2) * (px - u2) + (u2 - u1) * (py - v2)) / area
                if w0 < eps:
                    continue
                w1 = ((v2 - v0) * (px - u2) + (u0 - u2) * (py - v2)) / area
                if w1 < eps:
                    continue
                w2 = 1.0 - w0 - w1
                if w2 < eps:
                    continue
                if w0 < 0.0:
                    w0 = 0.0
                if w1 < 0.0:
                    w1 = 0.0
                if w2 < 0.0:
                    w2 = 0.0
                s = w0 * inv0 + w1 * inv1 + w2 * inv2
                z = 1.0 / s
                if z < depth[i, j]:
                    depth[i, j] = z
                    face_id[i, j] = f
                    norm = w0 * inv0 + w1 * inv1 + w2 * inv2
                    bary[i, j, 0] = w0 * inv0 / norm
                    bary[i, j, 1] = w1 * inv1 / norm
                    bary[i, j, 2] = w2 * inv2 / norm
    return depth, face_id, bary


@dataclass(frozen=True)
class RasterBuffers:
    """Per-pixel buffers; background pixels hold inf depth, face -1, zeros."""

    mask: np.ndarray      # (H, W) uint8, 1 = covered
    depth: np.ndarray     # (H, W) float64, camera-frame z
    face_id: np.ndarray   # (H, W) int64
    bary: np.ndarray      # (H, W, 3) float64
    normals: np.ndarray   # (H, W, 3) float64, camera frame, zero on background

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]


def rasterize(mesh: Mesh, camera: Camera) -> RasterBuffers:
    """Render coverage/depth/face/barycentric/normal buffers for a mesh."""
    height, width = camera.height, camera.width
    if mesh.n_faces == 0:
        return RasterBuffers(
            mask=np.zeros((height, width), dtype=np.uint8),
            depth=np.full((height, width), np.inf),
            face_id=np.full((height, width), -1, dtype=np.int64),
            bary=np.zeros((height, width, 3)),
            normals=np.zeros((height, width, 3)),
        )
    verts_cam = camera.world_to_camera(mesh.vertices)
    depth, face_id, bary = _raster_kernel(
        np.ascontiguousarray(verts_cam),
        np.ascontiguousarray(mesh.faces),
        float(camera.focal),
        float(camera.cx),
        float(camera.cy),
        int(width),
        int(height),
    )
    mask = (face_id >= 0).astype(np.uint8)

    # flat per-face normals in the camera frame
    f = mesh.faces
    e1 = verts_cam[f[:, 1]] - verts_cam[f[:, 0]]
    e2 = verts_cam[f[:, 2]] - verts_cam[f[:, 0]]
    fn = np.cross(e1, e2)
    norms = np.linalg.norm(fn, axis=1, keepdims=True)
    fn = np.divide(fn, norms, out=np.zeros_like(fn), where=norms > 0)
    normals = np.zeros((height, width, 3))
    covered = mask.astype(bool)
    normals[covered] = fn[face_id[covered]]

    return RasterBuffers(mask=mask, depth=depth, face_id=face_id, bary=bary, normals=normals)


def render_mask(mesh: Mesh, camera: Camera) -> np.ndarray:
    return rasterize(mesh, camera).mask


def render_normal_map(mesh: Mesh, camera: Camera) -> np.ndarray:
    """(H, W, 3) unit normals in the camera frame; zero vector on background."""
    return rasterize(mesh, camera).normals
