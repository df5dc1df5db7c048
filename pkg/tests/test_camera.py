import numpy as np
import pytest

from contourrefine.camera import Camera, project, project_jacobian
from contourrefine.errors import InputError


def test_origin_projects_to_principal_point():
    cam = Camera(azimuth=0.4, elevation=0.2, distance=3.0, focal=100.0, width=200, height=160)
    assert np.allclose(project(np.zeros(3), cam), [100.0, 80.0])


def test_pinhole_law_lateral_shift():
    cam = Camera(azimuth=0.0, elevation=0.0, distance=3.0, focal=120.0, width=128, height=128)
    # camera sits on +x looking at the origin; world +y is camera-right
    uv = project(np.array([0.0, 0.2, 0.0]), cam)
    assert uv[0] == pytest.approx(64.0 + 120.0 * 0.2 / 3.0)
    assert uv[1] == pytest.approx(64.0)
    # world +z is up, i.e. image v decreases
    uv = project(np.array([0.0, 0.0, 0.2]), cam)
    assert uv[1] == pytest.approx(64.0 - 120.0 * 0.2 / 3.0)


def test_point_behind_camera_rejected():
    cam = Camera(azimuth=0.0, elevation=0.0, distance=2.0, focal=100.0)
    with pytest.raises(InputError):
        project(np.array([5.0, 0.0, 0.0]), cam)  # behind the eye at (2,0,0)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(20):
        cam = Camera(
            azimuth=rng.uniform(0, 2 * np.pi),
            elevation=rng.uniform(-1.2, 1.2),
            distance=rng.uniform(2.0, 5.0),
            focal=rng.uniform(50, 300),
            width=128,
            height=96,
        )
        point = rng.normal(size=3) * 0.5
        jac = project_jacobian(point, cam)
        h = 1e-6 * cam.distance
        fd = np.zeros((2, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[:, k] = (project(point + e, cam) - project(point - e, cam)) / (2 * h)
        scale = np.abs(fd).max()
        assert np.abs(jac - fd).max() / scale < 1e-6


def test_rotation_is_orthonormal():
    cam = Camera(azimuth=1.1, elevation=0.7, distance=3.0, focal=100.0)
    r = cam.rotation()
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_top_down_view_has_valid_frame():
    cam = Camera(azimuth=0.0, elevation=np.pi / 2, distance=3.0, focal=100.0)
    r = cam.rotation()
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-9)


def test_camera_json_round_trip(tmp_path):
    cam = Camera(azimuth=0.5, elevation=-0.1, distance=2.5, focal=150.0, width=320, height=240)
    path = tmp_path / "cam.json"
    cam.save_json(path)
    back = Camera.load_json(path)
    assert back.azimuth == pytest.approx(cam.azimuth)
    assert back.elevation == pytest.approx(cam.elevation)
    assert back.distance == cam.distance
    assert back.focal == cam.focal
    assert (back.width, back.height) == (320, 240)


def test_camera_json_missing_field(tmp_path):
    path = tmp_path / "cam.json"
    path.write_text('{"azimuth_deg": 0}')
    with pytest.raises(InputError):
        Camera.load_json(path)


def test_invalid_camera_rejected():
    with pytest.raises(InputError):
        Camera(azimuth=0, elevation=0, distance=-1.0, focal=100.0)
    with pytest.raises(InputError):
        Camera(azimuth=0, elevation=0, distance=1.0, focal=0.0)
