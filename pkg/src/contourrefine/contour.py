"""External contour extraction and lifting to differentiable surface anchors.

Two extraction paths feed the matching problem:

* from a rendered mask: flood fill the background from the image corner,
  dilate by one pixel and intersect with the mask, which keeps the outer
  boundary ring and ignores interior holes;
* from a sketch: shoot horizontal and vertical rays at 13 rotation angles
  and keep the first stroke pixel each ray hits, so interior strokes drop
  out and only the outermost contour survives.

Mask contour pixels are then lifted to (face id, barycentric weights)
anchors using the rasterizer's buffers; those anchors are the handles whose
projections are later optimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._validation import check_binary_image, check_stroke_image
from .camera import Camera, project
from .errors import InputError, MaskBorderError, OpenContourError
from .images import stroke_pixels
from .mesh import Mesh
from .raster import RasterBuffers

FILTER_ANGLES_DEG = (0, 10, -10, 20, -20, 30, -30, 35, -35, 40, -40, 45, -45)

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SurfaceSampleSet:
    """Contour anchors: per anchor a face id, barycentric weights and the
    source pixel (row, col) it was lifted from."""

    face_ids: np.ndarray   # (n,) int64
    bary: np.ndarray       # (n, 3) float64, nonnegative, rows sum to 1
    pixels: np.ndarray     # (n, 2) int64 (row, col), unique

    def __len__(self) -> int:
        return int(self.face_ids.shape[0])

    def realize(self, mesh: Mesh) -> np.ndarray:
        """3D anchor positions on the given mesh, (n, 3)."""
        tri = mesh.vertices[mesh.faces[self.face_ids]]  # (n, 3, 3)
        return np.einsum("nk,nkd->nd", self.bary, tri)

    def project(self, mesh: Mesh, camera: Camera) -> np.ndarray:
        """2D pixel-coordinate projections of the realized anchors, (n, 2)."""
        return project(self.realize(mesh), camera)


def external_contour_of_mask(mask: np.ndarray) -> np.ndarray:
    """Outer boundary of a foreground mask as a contour-role image.

    The background is flood filled 4-connected from corner (0, 0), dilated
    by one pixel 8-connected, and intersected with the mask. Interior holes
    are not reachable from the corner, so they contribute no contour pixels.
    The mask must not touch the image border.
    """
    m = check_binary_image(mask, "mask").astype(bool)
    if m[0, :].any() or m[-1, :].any() or m[:, 0].any() or m[:, -1].any():
        raise MaskBorderError("mask touches the image border; flood fill is ambiguous")
    labels, _ = ndimage.label(~m, structure=_STRUCT_4)
    outside = labels == labels[0, 0]
    ring = ndimage.binary_dilation(outside, structure=_STRUCT_8) & m
    return (~ring).astype(np.uint8)


# ---------------------------------------------------------------------------
# sketch filtering

def _rotated_view(strokes: np.ndarray, angle_deg: float, side: int):
    """Nearest-neighbor rotation onto a side x side canvas.

    Returns the rotated stroke image plus per-pixel source (row, col) maps so
    selected pixels can be mapped back to the exact original stroke pixel
    they were sampled from.
    """
    h, w = strokes.shape
    th = math.radians(angle_deg)
    cos_t, sin_t = math.cos(th), math.sin(th)
    jj, ii = np.meshgrid(np.arange(side), np.arange(side))
    x = jj + 0.5 - side / 2.0
    y = ii + 0.5 - side / 2.0
    # inverse rotation back into the source frame
    sx = cos_t * x + sin_t * y + w / 2.0
    sy = -sin_t * x + cos_t * y + h / 2.0
    src_col = np.floor(sx).astype(np.int64)
    src_row = np.floor(sy).astype(np.int64)
    inside = (src_col >= 0) & (src_col < w) & (src_row >= 0) & (src_row < h)
    rot = np.zeros((side, side), dtype=bool)
    rot[inside] = strokes[src_row[inside], src_col[inside]]
    return rot, src_row, src_col


def _first_runs(strokes: np.ndarray):
    """Entry/exit columns of the first stroke run per row of a boolean
    stroke map, scanning left to right. Returns (rows, entry, exit) for rows
    that contain a stroke."""
    hit = strokes.any(axis=1)
    rows = np.flatnonzero(hit)
    if rows.size == 0:
        return rows, rows, rows
    sub = strokes[rows]
    entry = sub.argmax(axis=1)
    cols = np.arange(strokes.shape[1])
    after = (~sub) & (cols >= entry[:, None])
    has_end = after.any(axis=1)
    exit_ = np.where(has_end, after.argmax(axis=1) - 1, strokes.shape[1] - 1)
    return rows, entry, exit_


def _ray_pass(strokes: np.ndarray):
    """First-hit entry and exit pixels from all four borders of a boolean
    stroke map. Returns (entry_pixels, exit_pixels, run_lengths) with pixels
    as (row, col)."""
    side = strokes.shape[0]
    entries, exits, lengths = [], [], []

    def scan(img, to_pixel):
        rows, entry, exit_ = _first_runs(img)
        if rows.size:
            entries.append(to_pixel(rows, entry))
            exits.append(to_pixel(rows, exit_))
            lengths.append(exit_ - entry + 1)

    scan(strokes, lambda r, c: np.stack([r, c], 1))                          # west->east
    scan(strokes[:, ::-1], lambda r, c: np.stack([r, side - 1 - c], 1))      # east->west
    scan(strokes.T, lambda r, c: np.stack([c, r], 1))                        # north->south
    scan(strokes.T[:, ::-1], lambda r, c: np.stack([side - 1 - c, r], 1))    # south->north

    if not entries:
        empty = np.empty((0, 2), dtype=np.int64)
        return empty, empty, np.empty(0, dtype=np.int64)
    return (
        np.concatenate(entries, axis=0),
        np.concatenate(exits, axis=0),
        np.concatenate(lengths, axis=0),
    )


def filter_sketch_external(sketch: np.ndarray, thickness_threshold: float = 3.0) -> np.ndarray:
    """Keep only the externally visible strokes of a sketch.

    Rays perpendicular to the borders are shot over the sketch rotated by
    each angle in :data:`FILTER_ANGLES_DEG`; per ray only the first stroke
    run is considered. If the average entry-to-exit run length in a rotated
    view exceeds ``thickness_threshold`` pixels the pen is treated as thick
    and the exit pixels (inner shell) are kept, otherwise the entry pixels.
    Selected pixels are mapped back to the original grid, so the result is
    always a subset of the input strokes.
    """
    sk = check_stroke_image(sketch, "sketch")
    h, w = sk.shape
    side = int(math.ceil(math.hypot(h, w)))
    strokes = sk == 0
    keep = np.zeros((h, w), dtype=bool)
    for angle in FILTER_ANGLES_DEG:
        rot, src_row, src_col = _rotated_view(strokes, angle, side)
        entry_px, exit_px, lengths = _ray_pass(rot)
        if lengths.size == 0:
            continue
        chosen = exit_px if lengths.mean() > thickness_threshold else entry_px
        r = src_row[chosen[:, 0], chosen[:, 1]]
        c = src_col[chosen[:, 0], chosen[:, 1]]
        keep[r, c] = True
    return (~keep).astype(np.uint8)


def lift_contour(buffers: RasterBuffers, contour: np.ndarray) -> SurfaceSampleSet:
    """Lift contour pixels to barycentric surface anchors.

    ``contour`` must come from the same buffers (every contour pixel covered
    by the mask), normally via :func:`external_contour_of_mask`.
    """
    cont = check_binary_image(contour, "contour")
    pix = stroke_pixels(cont)
    if pix.size and not buffers.mask[pix[:, 0], pix[:, 1]].all():
        raise InputError("lift_contour: contour pixel not covered by the mask")
    return SurfaceSampleSet(
        face_ids=buffers.face_id[pix[:, 0], pix[:, 1]].astype(np.int64),
        bary=buffers.bary[pix[:, 0], pix[:, 1]].copy(),
        pixels=pix.astype(np.int64),
    )


def sketch_to_mask(
    sketch: np.ndarray, closing_radius: int = 2, leak_area_fraction: float = 0.95
) -> np.ndarray:
    """Fill the region enclosed by a sketch's external contour.

    The strokes are closed morphologically (``closing_radius`` 2 bridges
    stroke gaps up to about 3 px), the outside is flood filled 4-connected
    from corner (0, 0), and the foreground is the complement of that fill.
    If no enclosed interior remains (the fill leaked through the contour) or
    the foreground fills almost the whole image, the sketch cannot act as a
    silhouette target and :class:`OpenContourError` is raised.
    """
    sk = check_stroke_image(sketch, "sketch")
    strokes = sk == 0
    size = 2 * closing_radius + 1
    closed = ndimage.binary_closing(strokes, structure=np.ones((size, size), bool))
    closed |= strokes
    if closed[0, 0]:
        outside = np.zeros_like(closed)
    else:
        labels, _ = ndimage.label(~closed, structure=_STRUCT_4)
        outside = labels == labels[0, 0]
    foreground = ~outside
    interior = foreground & ~closed
    if not interior.any():
        raise OpenContourError("open contour: flood fill leaked through the sketch")
    if foreground.sum() > leak_area_fraction * foreground.size:
        raise OpenContourError("open contour: fill covers nearly the whole image")
    return foreground.astype(np.uint8)
