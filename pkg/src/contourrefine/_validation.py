"""Input validation helpers.

Small ``check_*`` functions used at public API boundaries. They normalize
array inputs (dtype, contiguity) and raise :class:`~contourrefine.errors.InputError`
with a message naming the offending argument, in the spirit of scikit-learn's
validation utilities.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySketchError, InputError


def check_array(a, name, shape=None, dtype=np.float64):
    a = np.asarray(a, dtype=dtype)
    if shape is not None:
        if len(shape) != a.ndim or any(
            s is not None and s != d for s, d in zip(shape, a.shape)
        ):
            raise InputError(f"{name}: expected shape {shape}, got {a.shape}")
    if np.issubdtype(a.dtype, np.floating) and not np.all(np.isfinite(a)):
        raise InputError(f"{name}: contains non-finite values")
    return a


def check_vertices(vertices, name="vertices"):
    v = check_array(vertices, name)
    if v.ndim != 2 or v.shape[1] != 3:
        raise InputError(f"{name}: expected an (n, 3) array, got shape {v.shape}")
    return np.ascontiguousarray(v)


def check_faces(faces, n_vertices, name="faces"):
    f = np.asarray(faces)
    if f.ndim != 2 or f.shape[1] != 3:
        raise InputError(f"{name}: expected an (m, 3) index array, got shape {f.shape}")
    f = np.ascontiguousarray(f, dtype=np.int64)
    if f.size and (f.min() < 0 or f.max() >= n_vertices):
        raise InputError(f"{name}: vertex index out of range [0, {n_vertices})")
    degenerate = (
        (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    )
    if degenerate.any():
        raise InputError(f"{name}: face {int(np.flatnonzero(degenerate)[0])} repeats a vertex")
    return f


def check_binary_image(img, name="image"):
    """Validate a {0,1} raster and return it as a uint8 array."""
    a = np.asarray(img)
    if a.ndim != 2:
        raise InputError(f"{name}: expected a 2-D array, got shape {a.shape}")
    if a.dtype == bool:
        return a.astype(np.uint8)
    a = a.astype(np.uint8, copy=False)
    bad = (a != 0) & (a != 1)
    if bad.any():
        raise InputError(f"{name}: values must be 0 or 1")
    return a


def check_stroke_image(img, name="sketch"):
    """Validate a stroke-role image (0 = pen stroke) and require at least one stroke."""
    a = check_binary_image(img, name)
    if not (a == 0).any():
        raise EmptySketchError(f"{name}: no stroke pixels (all ones)")
    return a


def check_code(theta, k, name="theta"):
    t = np.asarray(theta, dtype=np.float64).reshape(-1)
    if t.shape[0] != k:
        raise InputError(f"{name}: expected {k} latent values, got {t.shape[0]}")
    if not np.all(np.isfinite(t)):
        raise InputError(f"{name}: contains non-finite values")
    return t
