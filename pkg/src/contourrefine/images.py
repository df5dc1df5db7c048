"""Binary raster helpers and image file I/O.

A binary image is a (H, W) uint8 array of {0, 1}. Two semantic roles share
this storage:

* stroke/contour role: 0 = pen stroke or contour pixel, 1 = blank paper;
* mask role: 1 = foreground (object), 0 = background.

Every function taking or returning a binary image states which role it
expects. On disk, stroke images map strokes to black (luminance < 128) on
white; masks map foreground to white.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from ._validation import check_binary_image


def stroke_pixels(img: np.ndarray) -> np.ndarray:
    """(n, 2) array of (row, col) for stroke-role pixels (value 0)."""
    return np.argwhere(np.asarray(img) == 0)


def pixel_centers(rowcol: np.ndarray) -> np.ndarray:
    """Map integer (row, col) pixels to continuous (u, v) pixel-center coords."""
    rc = np.asarray(rowcol, dtype=np.float64).reshape(-1, 2)
    return np.stack([rc[:, 1] + 0.5, rc[:, 0] + 0.5], axis=1)


def centers_to_pixels(uv: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest (row, col) pixel for continuous (u, v) coords, clipped to bounds."""
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    col = np.clip(np.floor(uv[:, 0]).astype(np.int64), 0, width - 1)
    row = np.clip(np.floor(uv[:, 1]).astype(np.int64), 0, height - 1)
    return np.stack([row, col], axis=1)


# ---------------------------------------------------------------------------
# file I/O

def load_stroke_image(path) -> np.ndarray:
    """Read a PNG/PGM sketch; pixels with luminance < 128 become strokes (0)."""
    img = Image.open(path).convert("L")
    arr = np.asarray(img)
    return (arr >= 128).astype(np.uint8)


def save_stroke_image(img: np.ndarray, path) -> None:
    a = check_binary_image(img, "stroke image")
    Image.fromarray((a * 255).astype(np.uint8), mode="L").save(path)


def load_mask_image(path) -> np.ndarray:
    """Read a PNG/PGM mask; pixels with luminance >= 128 become foreground (1)."""
    img = Image.open(path).convert("L")
    return (np.asarray(img) >= 128).astype(np.uint8)


def save_mask_image(img: np.ndarray, path) -> None:
    a = check_binary_image(img, "mask image")
    Image.fromarray((a * 255).astype(np.uint8), mode="L").save(path)


def save_depth_pgm(depth: np.ndarray, path) -> None:
    """Depth buffer as 8-bit PGM: near = dark, far = light, background = 255."""
    d = np.asarray(depth, dtype=np.float64)
    finite = np.isfinite(d)
    out = np.full(d.shape, 255, dtype=np.uint8)
    if finite.any():
        lo = d[finite].min()
        hi = d[finite].max()
        span = hi - lo if hi > lo else 1.0
        out[finite] = np.round(254.0 * (d[finite] - lo) / span).astype(np.uint8)
    Image.fromarray(out, mode="L").save(path, format="PPM")


def save_normal_map_png(normals: np.ndarray, path) -> None:
    """Normal map as RGB PNG with channel = (n + 1) / 2."""
    n = np.asarray(normals, dtype=np.float64)
    rgb = np.clip((n + 1.0) * 0.5, 0.0, 1.0)
    Image.fromarray(np.round(rgb * 255.0).astype(np.uint8), mode="RGB").save(path, format="PNG")
