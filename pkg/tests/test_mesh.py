import numpy as np
import pytest

from contourrefine.errors import ConnectivityError, InputError
from contourrefine.mesh import (
    Mesh,
    box_ellipsoid_blend,
    check_watertight,
    load_obj,
    save_obj,
    signed_volume,
    spherified_cube,
    subdivided_cube,
    torus,
)


def test_subdivided_cube_is_watertight_and_outward():
    cube = subdivided_cube(4)
    check_watertight(cube.faces, cube.n_vertices)
    assert signed_volume(cube) == pytest.approx(8.0)
    assert cube.n_vertices == 6 * 25 - 12 * 5 + 8  # shared edges and corners


def test_sphere_volume_approaches_analytic():
    sph = spherified_cube(10)
    check_watertight(sph.faces, sph.n_vertices)
    assert signed_volume(sph) == pytest.approx(4.0 / 3.0 * np.pi, rel=0.03)


def test_torus_watertight():
    t = torus()
    check_watertight(t.faces, t.n_vertices)
    assert signed_volume(t) > 0


def test_blend_family_normalized():
    rng = np.random.default_rng(0)
    for _ in range(5):
        m = box_ellipsoid_blend(3, scale=rng.uniform(0.3, 1.0, 3), spherify=rng.uniform(0, 1))
        assert m.bounding_radius() == pytest.approx(1.0)


def test_open_mesh_rejected():
    tri = Mesh(np.eye(3), np.array([[0, 1, 2]]))
    with pytest.raises(ConnectivityError):
        check_watertight(tri.faces, tri.n_vertices)


def test_inconsistent_winding_rejected():
    cube = subdivided_cube(1)
    faces = cube.faces.copy()
    faces[0] = faces[0][::-1]  # flip one face
    with pytest.raises(ConnectivityError):
        check_watertight(faces, cube.n_vertices)


def test_degenerate_face_rejected():
    with pytest.raises(InputError):
        Mesh(np.eye(3), np.array([[0, 1, 1]]))


def test_obj_round_trip(tmp_path):
    mesh = spherified_cube(3)
    path = tmp_path / "m.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_obj_rejects_quads(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(InputError):
        load_obj(path)


def test_face_normals_unit_outward():
    sph = spherified_cube(6)
    normals = sph.face_normals()
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
    centers = sph.vertices[sph.faces].mean(axis=1)
    assert (np.einsum("ij,ij->i", normals, centers) > 0).all()
