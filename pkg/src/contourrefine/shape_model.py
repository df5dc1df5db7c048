"""Latent shape representation: a linear blendshape decoder over a fixed
watertight template.

A template holds base vertices, shared connectivity and K orthonormal
displacement modes. Decoding is affine,

    vertices(theta) = base + reshape(basis @ theta),

so the Jacobian of the vertices with respect to the code is exactly the
basis matrix, which downstream gradient code relies on. Codes are kept
inside a per-mode box of +-3 sigma, where sigma is the spread observed when
the basis was fit, acting as the shape prior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from ._validation import check_array, check_code, check_stroke_image
from .camera import Camera
from .chamfer2d import chamfer_loss
from .contour import external_contour_of_mask, filter_sketch_external, lift_contour
from .errors import InputError, MaskBorderError
from .images import pixel_centers, stroke_pixels
from .mesh import Mesh, check_watertight
from .raster import rasterize

CLAMP_SIGMAS = 3.0


@dataclass(frozen=True)
class TemplateMesh:
    """Decoder parameters: base shape, connectivity and displacement basis."""

    base_vertices: np.ndarray  # (V, 3)
    faces: np.ndarray          # (F, 3)
    basis: np.ndarray          # (3V, K), orthonormal columns
    sigma: np.ndarray          # (K,) per-mode spread, >= 0

    def __post_init__(self):
        base = check_array(self.base_vertices, "base_vertices")
        object.__setattr__(self, "base_vertices", np.ascontiguousarray(base))
        mesh = Mesh(self.base_vertices, self.faces)
        object.__setattr__(self, "faces", mesh.faces)
        check_watertight(self.faces, mesh.n_vertices)
        if mesh.bounding_radius() > 1.0 + 1e-6:
            raise InputError("template: base shape exceeds unit bounding radius")
        basis = check_array(self.basis, "basis")
        if basis.ndim != 2 or basis.shape[0] != 3 * mesh.n_vertices:
            raise InputError(
                f"basis: expected shape ({3 * mesh.n_vertices}, K), got {basis.shape}"
            )
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-8):
            raise InputError("basis: columns must be orthonormal")
        object.__setattr__(self, "basis", np.ascontiguousarray(basis))
        sigma = check_array(self.sigma, "sigma", shape=(basis.shape[1],))
        if (sigma < 0).any():
            raise InputError("sigma: spreads must be nonnegative")
        object.__setattr__(self, "sigma", np.ascontiguousarray(sigma))

    @property
    def n_vertices(self) -> int:
        return self.base_vertices.shape[0]

    @property
    def n_modes(self) -> int:
        return self.basis.shape[1]

    @property
    def clamp_bounds(self) -> np.ndarray:
        return CLAMP_SIGMAS * self.sigma

    def base_mesh(self) -> Mesh:
        return Mesh(self.base_vertices, self.faces)

    def clamp(self, theta: np.ndarray) -> np.ndarray:
        b = self.clamp_bounds
        return np.clip(np.asarray(theta, dtype=np.float64), -b, b)


def decode(template: TemplateMesh, theta: np.ndarray) -> Mesh:
    """Decode a latent code to a mesh. Affine in theta; d(vertices)/d(theta)
    is the template basis."""
    t = check_code(theta, template.n_modes)
    displacement = (template.basis @ t).reshape(-1, 3)
    return Mesh(template.base_vertices + displacement, template.faces)


def fit_basis(meshes, k: int) -> TemplateMesh:
    """Build a template from example meshes with identical connectivity.

    The base shape is the per-vertex mean; the basis holds the top-k
    principal displacement directions, so projecting any input onto it gives
    the smallest possible rank-k reconstruction error. sigma is the
    population standard deviation of each mode over the examples.
    """
    meshes = list(meshes)
    if len(meshes) < k + 1:
        raise InputError(f"fit_basis: need at least {k + 1} meshes for k={k}")
    faces = meshes[0].faces
    n_v = meshes[0].n_vertices
    for m in meshes[1:]:
        if m.n_vertices != n_v or not np.array_equal(m.faces, faces):
            raise InputError("fit_basis: meshes must share connectivity")
    if k < 1 or k > 3 * n_v:
        raise InputError(f"fit_basis: k={k} out of range for {n_v} vertices")

    x = np.stack([m.vertices.reshape(-1) for m in meshes])  # (n, 3V)
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    basis = np.ascontiguousarray(vt[:k].T)
    sigma = s[:k] / np.sqrt(len(meshes))
    return TemplateMesh(
        base_vertices=mean.reshape(-1, 3),
        faces=faces,
        basis=basis,
        sigma=sigma,
    )


def project_onto_basis(template: TemplateMesh, mesh: Mesh) -> np.ndarray:
    """Latent code of the basis projection of a mesh (least-squares encode)."""
    if mesh.n_vertices != template.n_vertices:
        raise InputError("project_onto_basis: vertex count mismatch")
    d = (mesh.vertices - template.base_vertices).reshape(-1)
    return template.basis.T @ d


def candidate_codes(template: TemplateMesh, n_starts: int, seed: int) -> np.ndarray:
    """The zero code plus quasi-random codes inside the clamp box."""
    if n_starts < 1:
        raise InputError("n_starts must be >= 1")
    k = template.n_modes
    codes = np.zeros((n_starts, k))
    if n_starts > 1:
        sampler = qmc.Sobol(d=k, scramble=True, seed=seed)
        draw = 1 << (n_starts - 2).bit_length()  # power of two keeps Sobol balanced
        u = sampler.random(draw)[: n_starts - 1]
        codes[1:] = (2.0 * u - 1.0) * template.clamp_bounds
    return codes


def score_code_against_contour(
    template: TemplateMesh, theta: np.ndarray, camera: Camera, target_centers: np.ndarray
) -> float:
    """Chamfer score of a candidate; inf when the candidate cannot be scored
    (mask leaves frame or projects to nothing)."""
    mesh = decode(template, theta)
    buffers = rasterize(mesh, camera)
    try:
        cont = external_contour_of_mask(buffers.mask)
    except MaskBorderError:
        return np.inf
    anchors = lift_contour(buffers, cont)
    if len(anchors) == 0:
        return np.inf
    loss, _ = chamfer_loss(anchors.project(mesh, camera), target_centers)
    return loss


def initialize_code(
    sketch: np.ndarray,
    camera: Camera,
    template: TemplateMesh,
    n_starts: int = 16,
    seed: int = 0,
) -> np.ndarray:
    """Pick a starting code by multi-start Chamfer scoring against the
    sketch's external contour.

    Evaluates the zero code plus ``n_starts - 1`` quasi-random codes in the
    clamp box and returns the lowest-scoring one. Deterministic for a fixed
    seed; ties keep the lowest candidate index.
    """
    sk = check_stroke_image(sketch, "sketch")
    filtered = filter_sketch_external(sk)
    target_centers = pixel_centers(stroke_pixels(filtered))
    codes = candidate_codes(template, n_starts, seed)
    best_idx = 0
    best_score = np.inf
    for i, theta in enumerate(codes):
        score = score_code_against_contour(template, theta, camera, target_centers)
        if score < best_score:
            best_idx = i
            best_score = score
    return codes[best_idx].copy()


# ---------------------------------------------------------------------------
# basis / code files: one-line JSON header + little-endian float64 payload

_BASIS_FORMAT = "contourrefine-basis-v1"
_CODE_FORMAT = "contourrefine-code-v1"


def save_basis(template: TemplateMesh, path) -> None:
    header = {
        "format": _BASIS_FORMAT,
        "k": int(template.n_modes),
        "n_vertices": int(template.n_vertices),
        "sigma": [float(s) for s in template.sigma],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(template.basis, dtype="<f8").tobytes())


def load_basis(path):
    """Returns (basis, sigma); pair with the template OBJ to rebuild a
    TemplateMesh."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _BASIS_FORMAT:
            raise InputError(f"{path}: not a basis file")
        k = int(header["k"])
        n_v = int(header["n_vertices"])
        payload = fh.read()
    expected = 3 * n_v * k * 8
    if len(payload) != expected:
        raise InputError(f"{path}: basis payload truncated")
    basis = np.frombuffer(payload, dtype="<f8").reshape(3 * n_v, k).copy()
    sigma = np.asarray(header["sigma"], dtype=np.float64)
    return basis, sigma


def load_template(obj_path, basis_path) -> TemplateMesh:
    from .mesh import load_obj

    mesh = load_obj(obj_path)
    basis, sigma = load_basis(basis_path)
    return TemplateMesh(mesh.vertices, mesh.faces, basis, sigma)


def save_template(template: TemplateMesh, obj_path, basis_path) -> None:
    from .mesh import save_obj

    save_obj(template.base_mesh(), obj_path)
    save_basis(template, basis_path)


def save_code(theta: np.ndarray, path) -> None:
    t = np.asarray(theta, dtype=np.float64).reshape(-1)
    header = {"format": _CODE_FORMAT, "k": int(t.shape[0])}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_code(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _CODE_FORMAT:
            raise InputError(f"{path}: not a code file")
        k = int(header["k"])
        payload = fh.read()
    if len(payload) != k * 8:
        raise InputError(f"{path}: code payload truncated")
    return np.frombuffer(payload, dtype="<f8").copy()
