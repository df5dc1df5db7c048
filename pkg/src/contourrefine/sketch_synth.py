"""Synthetic sketch rendering and the randomized multi-view dataset
protocol.

Two styles are produced from the raster buffers of a mesh:

* occluding: depth-discontinuity pixels only, i.e. the silhouette and
  self-occlusion boundaries seen from the camera;
* sketchfd: the occluding strokes plus pixels where the rendered normal map
  turns sharply (ridges and valleys), in the spirit of edge detection over
  depth and normal maps.

Strokes live on the near side of each discontinuity: a pixel fires when
some 8-neighbor is deeper by more than the depth threshold, with background
treated as very far away.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .camera import Camera
from .errors import InputError
from .images import save_stroke_image
from .mesh import Mesh
from .raster import RasterBuffers, rasterize
from .shape_model import TemplateMesh, decode, save_code

DEFAULT_DEPTH_FRACTION = 0.02   # depth jump threshold as a fraction of camera distance
DEFAULT_NORMAL_ANGLE = math.radians(25.0)

_SHIFTS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _shift(a: np.ndarray, di: int, dj: int, fill) -> np.ndarray:
    out = np.full_like(a, fill)
    h, w = a.shape[:2]
    si = slice(max(0, di), min(h, h + di))
    sj = slice(max(0, dj), min(w, w + dj))
    ti = slice(max(0, -di), min(h, h - di))
    tj = slice(max(0, -dj), min(w, w - dj))
    out[ti, tj] = a[si, sj]
    return out


_CONTINUATION = 2.0


def depth_discontinuities(buffers: RasterBuffers, tau_depth: float) -> np.ndarray:
    """Boolean map of pixels on the near side of a depth discontinuity.

    A covered pixel fires when an 8-neighbor is background, or when a
    neighbor is deeper by more than ``tau_depth`` plus what the slope on the
    opposite side predicts. The continuation term keeps smooth grazing
    surfaces near a silhouette from reading as discontinuities, so strokes
    stay about one pixel wide.
    """
    depth = buffers.depth.copy()
    finite = np.isfinite(depth)
    if not finite.any():
        return np.zeros_like(buffers.mask, dtype=bool)
    far = depth[finite].max() + 10.0 * max(tau_depth, 1e-12)
    depth[~finite] = far
    background = ~finite
    fire = np.zeros_like(depth, dtype=bool)
    for di, dj in _SHIFTS:
        ahead = _shift(depth, di, dj, far)
        behind = _shift(depth, -di, -dj, far)
        bg_ahead = _shift(background, di, dj, True)
        slope = np.maximum(depth - behind, 0.0)
        fire |= bg_ahead | ((ahead - depth) > tau_depth + _CONTINUATION * slope)
    return fire & finite


def normal_ridges(buffers: RasterBuffers, tau_angle: float) -> np.ndarray:
    """Pixels where the angle to some covered 8-neighbor's normal exceeds
    tau_angle (radians)."""
    covered = buffers.mask.astype(bool)
    if not covered.any():
        return np.zeros_like(covered)
    n = buffers.normals
    cos_thr = math.cos(tau_angle)
    fire = np.zeros_like(covered)
    for di, dj in _SHIFTS:
        nn = _shift(n, di, dj, 0.0)
        nc = _shift(covered, di, dj, False)
        dot = (n * nn).sum(axis=2)
        fire |= covered & nc & (dot < cos_thr)
    return fire


def render_occluding(
    mesh: Mesh, camera: Camera, tau_depth: float | None = None
) -> np.ndarray:
    """Occluding-contour sketch (stroke role: strokes are 0)."""
    buffers = rasterize(mesh, camera)
    tau = camera.distance * DEFAULT_DEPTH_FRACTION if tau_depth is None else tau_depth
    strokes = depth_discontinuities(buffers, tau)
    return (~strokes).astype(np.uint8)


def render_sketchfd(
    mesh: Mesh,
    camera: Camera,
    tau_depth: float | None = None,
    tau_angle: float = DEFAULT_NORMAL_ANGLE,
) -> np.ndarray:
    """Depth-and-normal-map edge sketch (stroke role: strokes are 0)."""
    buffers = rasterize(mesh, camera)
    tau = camera.distance * DEFAULT_DEPTH_FRACTION if tau_depth is None else tau_depth
    strokes = depth_discontinuities(buffers, tau) | normal_ridges(buffers, tau_angle)
    return (~strokes).astype(np.uint8)


STYLES = ("sketchfd", "occluding")


def generate_dataset(
    template: TemplateMesh,
    codes,
    views_per_shape: int,
    out_dir,
    seed: int = 0,
    width: int = 256,
    height: int = 256,
    distance: float | None = None,
    focal: float | None = None,
):
    """Render the multi-view sketch dataset and write its manifest.

    For every code, ``views_per_shape`` cameras are drawn with azimuth
    uniform in [0, 2pi) and elevation uniform in [-pi/9, pi/3], pointing at
    the origin at fixed distance and focal length. Each sample gets one
    sketch per style, the ground-truth code and the camera. Returns the list
    of manifest records; the manifest itself is JSON lines at
    ``out_dir/manifest.jsonl``.
    """
    codes = [np.asarray(c, dtype=np.float64).reshape(-1) for c in codes]
    if not codes:
        raise InputError("generate_dataset: empty shape list")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    distance = 3.0 if distance is None else distance
    focal = 1.2 * min(width, height) if focal is None else focal

    records = []
    for shape_idx, code in enumerate(codes):
        mesh = decode(template, code)
        code_path = out / f"shape{shape_idx:04d}.code"
        save_code(code, code_path)
        for view_idx in range(views_per_shape):
            azimuth = rng.uniform(0.0, 2.0 * np.pi)
            elevation = rng.uniform(-np.pi / 9.0, np.pi / 3.0)
            camera = Camera(
                azimuth=azimuth,
                elevation=elevation,
                distance=distance,
                focal=focal,
                width=width,
                height=height,
            )
            sample_id = f"shape{shape_idx:04d}_view{view_idx:02d}"
            sketches = {}
            for style in STYLES:
                sketch = (
                    render_sketchfd(mesh, camera)
                    if style == "sketchfd"
                    else render_occluding(mesh, camera)
                )
                path = out / f"{sample_id}_{style}.png"
                save_stroke_image(sketch, path)
                sketches[style] = path.name
            records.append(
                {
                    "sample_id": sample_id,
                    "shape_index": shape_idx,
                    "view_index": view_idx,
                    "sketches": sketches,
                    "camera": camera.to_json_dict(),
                    "code_path": code_path.name,
                }
            )
    with open(out / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return records


def load_manifest(path):
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
