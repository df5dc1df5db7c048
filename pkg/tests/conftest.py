import numpy as np
import pytest

from contourrefine.camera import Camera
from contourrefine.mesh import box_ellipsoid_blend
from contourrefine.shape_model import TemplateMesh, fit_basis


def blob_family(rng, count, subdivisions=3):
    return [
        box_ellipsoid_blend(
            subdivisions,
            scale=rng.uniform(0.4, 1.0, 3),
            spherify=rng.uniform(0.0, 1.0),
            taper=rng.uniform(-0.5, 0.5),
            shear=rng.uniform(-0.3, 0.3),
        )
        for _ in range(count)
    ]


def make_blob_template(seed=42, k=4, count=12, subdivisions=3):
    rng = np.random.default_rng(seed)
    return fit_basis(blob_family(rng, count, subdivisions), k)


def random_template(rng, k, subdivisions=None):
    n = int(rng.integers(3, 5)) if subdivisions is None else subdivisions
    return fit_basis(blob_family(rng, max(k + 3, 8), n), k)


def two_lobe_template(crosstalk=0.25):
    """Two localized displacement modes: mode 1 stretches the +x lobe, mode 2
    deforms the -x lobe with a small bend of the +x tip (crosstalk), so the
    locality regularizers have something real to resist."""
    base = box_ellipsoid_blend(4, scale=(1.0, 0.45, 0.45), spherify=0.55)
    v = base.vertices
    w1 = np.maximum(v[:, 0] - 0.25, 0.0)
    m1 = np.zeros_like(v)
    m1[:, 0] = w1
    w2 = np.maximum(-v[:, 0] - 0.25, 0.0)
    m2 = np.zeros_like(v)
    m2[:, 2] = w2
    m2[:, 2] += crosstalk * w1
    c1 = m1.reshape(-1)
    c1 /= np.linalg.norm(c1)
    c2 = m2.reshape(-1)
    c2 -= c1 * (c1 @ c2)
    c2 /= np.linalg.norm(c2)
    return TemplateMesh(v, base.faces, np.stack([c1, c2], axis=1), sigma=np.array([0.6, 0.6]))


def scale_mode_template(radius=0.7, n=6):
    """Single uniform-scale mode on a sphere; returns (template, vertex_norm)
    with scale = 1 + theta / vertex_norm."""
    from contourrefine.mesh import spherified_cube

    base = spherified_cube(n, radius=radius)
    col = base.vertices.reshape(-1).copy()
    norm = np.linalg.norm(col)
    col /= norm
    tpl = TemplateMesh(base.vertices, base.faces, col[:, None], sigma=np.array([1.0]))
    return tpl, norm


def translation_template(base_mesh, axis=0):
    """Single mode translating the whole mesh along a world axis."""
    v = base_mesh.vertices
    col = np.zeros_like(v)
    col[:, axis] = 1.0
    col = col.reshape(-1)
    col /= np.linalg.norm(col)
    return TemplateMesh(v, base_mesh.faces, col[:, None], sigma=np.array([1.0]))


@pytest.fixture(scope="session")
def blob_template():
    return make_blob_template()


@pytest.fixture(scope="session")
def small_camera():
    return Camera.default_for(1.0, 64, 64, azimuth=0.6, elevation=0.3)


@pytest.fixture(scope="session")
def mid_camera():
    return Camera.default_for(1.0, 128, 128, azimuth=0.6, elevation=0.3)
