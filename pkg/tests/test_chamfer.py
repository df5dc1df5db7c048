import numpy as np
import pytest

from contourrefine.chamfer2d import (
    assign_nearest,
    chamfer_loss,
    chamfer_loss_brute,
    chamfer_with_assignments,
    nearest_distances,
)
from contourrefine.errors import InputError


def test_bijective_match_is_zero():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 50, (30, 2))
    loss, grad = chamfer_loss(pts, pts.copy())
    assert loss == 0.0
    assert np.abs(grad).max() == 0.0


def test_single_pair_worked_example():
    # one anchor at (5,5), one target at (5,8): each directional term is 9,
    # normalized by set size 1, so the loss is 18 and the anchor gradient is
    # 2*(u - v) from each direction = (0, -12)
    loss, grad = chamfer_loss(np.array([[5.0, 5.0]]), np.array([[5.0, 8.0]]))
    brute_loss, brute_grad = chamfer_loss_brute(np.array([[5.0, 5.0]]), np.array([[5.0, 8.0]]))
    assert loss == pytest.approx(18.0)
    assert np.allclose(grad, [[0.0, -12.0]])
    assert brute_loss == loss
    assert np.allclose(brute_grad, grad)


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(42)
    for trial in range(200):
        n = int(rng.integers(1, 200))
        m = int(rng.integers(1, 200))
        p = rng.uniform(0, 64, (n, 2))
        t = rng.uniform(0, 64, (m, 2))
        l1, g1 = chamfer_loss(p, t)
        l2, g2 = chamfer_loss_brute(p, t)
        assert abs(l1 - l2) <= 1e-9
        assert np.abs(g1 - g2).max() <= 1e-9


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    p = rng.uniform(0, 40, (25, 2))
    t = rng.uniform(0, 40, (31, 2))
    idx_pt, idx_tp = assign_nearest(p, t)
    _, grad = chamfer_with_assignments(p, t, idx_pt, idx_tp)
    h = 1e-6
    for i in range(0, 25, 5):
        for d in range(2):
            e = np.zeros_like(p)
            e[i, d] = h
            lp = chamfer_with_assignments(p + e, t, idx_pt, idx_tp)[0]
            lm = chamfer_with_assignments(p - e, t, idx_pt, idx_tp)[0]
            fd = (lp - lm) / (2 * h)
            assert fd == pytest.approx(grad[i, d], rel=1e-5, abs=1e-8)


def test_empty_sets_rejected():
    pts = np.zeros((3, 2))
    with pytest.raises(InputError):
        chamfer_loss(np.zeros((0, 2)), pts)
    with pytest.raises(InputError):
        chamfer_loss(pts, np.zeros((0, 2)))


def test_nearest_distances():
    d = nearest_distances(np.array([[0.0, 0.0], [10.0, 0.0]]), np.array([[3.0, 4.0]]))
    assert np.allclose(d, [5.0, np.hypot(7.0, 4.0)])
