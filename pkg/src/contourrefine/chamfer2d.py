"""Bidirectional 2D Chamfer loss between projected contour anchors and
target contour pixels, with the gradient over anchor positions.

Each directional sum of squared nearest-neighbor distances is normalized by
its own set size, which keeps step sizes resolution independent. Nearest
neighbor assignments are treated as locally constant, so the gradient of
``min_v ||u - v||^2`` is ``2 (u - v*)`` with ``v*`` the current nearest
target, plus the pulled-back terms from target pixels whose nearest anchor
is ``u``.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError


def assign_nearest(points: np.ndarray, targets: np.ndarray):
    """Nearest-neighbor assignments in both directions.

    Returns ``(idx_pt, idx_tp)``: for each point the index of its nearest
    target, and for each target the index of its nearest point.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    t = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    if p.shape[0] == 0:
        raise InputError("assign_nearest: empty anchor set")
    if t.shape[0] == 0:
        raise InputError("assign_nearest: empty target set")
    _, idx_pt = cKDTree(t).query(p)
    _, idx_tp = cKDTree(p).query(t)
    return idx_pt, idx_tp


def chamfer_with_assignments(
    points: np.ndarray, targets: np.ndarray, idx_pt: np.ndarray, idx_tp: np.ndarray
):
    """Chamfer value and d(loss)/d(points) under fixed assignments.

    With assignments computed at the same ``points`` this equals the true
    Chamfer loss; holding them fixed while points move is the frozen
    linearization the per-step gradients use.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    t = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    n_p = p.shape[0]
    n_t = t.shape[0]
    diff_pt = p - t[idx_pt]
    diff_tp = p[idx_tp] - t
    loss = float((diff_pt ** 2).sum() / n_p + (diff_tp ** 2).sum() / n_t)
    grad = (2.0 / n_p) * diff_pt
    np.add.at(grad, idx_tp, (2.0 / n_t) * diff_tp)
    return loss, grad


def chamfer_loss(points: np.ndarray, targets: np.ndarray):
    """Loss and d(loss)/d(points) for two non-empty 2D point sets.

    ``points`` are continuous anchor projections, ``targets`` are target
    pixel centers; both (n, 2). Nearest-neighbor assignments are computed
    here and treated as locally constant by the gradient. Returns
    ``(loss, grad)`` with ``grad`` shaped like ``points``.
    """
    idx_pt, idx_tp = assign_nearest(points, targets)
    return chamfer_with_assignments(points, targets, idx_pt, idx_tp)


def chamfer_loss_brute(points: np.ndarray, targets: np.ndarray):
    """All-pairs reference implementation; the correctness oracle for
    :func:`chamfer_loss`. Quadratic, only suitable for small sets."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    t = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    if p.shape[0] == 0 or t.shape[0] == 0:
        raise InputError("chamfer_loss_brute: empty point set")
    d2 = ((p[:, None, :] - t[None, :, :]) ** 2).sum(axis=2)
    idx_pt = d2.argmin(axis=1)
    idx_tp = d2.argmin(axis=0)
    n_p, n_t = p.shape[0], t.shape[0]
    loss = float(d2[np.arange(n_p), idx_pt].sum() / n_p + d2[idx_tp, np.arange(n_t)].sum() / n_t)
    grad = (2.0 / n_p) * (p - t[idx_pt])
    np.add.at(grad, idx_tp, (2.0 / n_t) * (p[idx_tp] - t))
    return loss, grad


def nearest_distances(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Distance from each point to its nearest target."""
    tree = cKDTree(np.asarray(targets, dtype=np.float64).reshape(-1, 2))
    d, _ = tree.query(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    return d
