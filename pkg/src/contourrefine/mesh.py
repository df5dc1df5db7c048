"""Triangle meshes: container, topology checks, OBJ I/O, procedural shapes.

Meshes are fixed-topology triangle surfaces in object units, centered at the
origin with bounding radius around 1. Coordinates are right-handed and faces
wind counter-clockwise when seen from outside (outward normals).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_faces, check_vertices
from .errors import ConnectivityError, InputError


@dataclass(frozen=True)
class Mesh:
    """Vertices (n, 3) float64 plus faces (m, 3) int64."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", check_vertices(self.vertices))
        object.__setattr__(self, "faces", check_faces(self.faces, len(self.vertices)))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def bounding_radius(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def face_areas(self) -> np.ndarray:
        v = self.vertices
        f = self.faces
        cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def face_normals(self) -> np.ndarray:
        """Unit outward normals per face (zero vector for degenerate faces)."""
        v = self.vertices
        f = self.faces
        cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        norms = np.linalg.norm(cross, axis=1, keepdims=True)
        return np.divide(cross, norms, out=np.zeros_like(cross), where=norms > 0)

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        return Mesh(vertices, self.faces)


def directed_edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )


def check_watertight(faces: np.ndarray, n_vertices: int) -> None:
    """Require a closed, consistently wound 2-manifold.

    Every undirected edge must be shared by exactly two faces, and the two
    incident faces must traverse it in opposite directions (each directed
    edge appears exactly once).
    """
    faces = check_faces(faces, n_vertices)
    de = directed_edges(faces)
    keys = de[:, 0] * n_vertices + de[:, 1]
    if np.unique(keys).size != keys.size:
        raise ConnectivityError("winding: a directed edge appears more than once")
    lo = de.min(axis=1).astype(np.int64)
    hi = de.max(axis=1).astype(np.int64)
    ukeys = lo * n_vertices + hi
    _, counts = np.unique(ukeys, return_counts=True)
    if not (counts == 2).all():
        raise ConnectivityError(
            "not watertight: %d edge(s) not shared by exactly two faces"
            % int((counts != 2).sum())
        )


def signed_volume(mesh: Mesh) -> float:
    v = mesh.vertices
    f = mesh.faces
    return float(np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]])).sum() / 6.0)


# ---------------------------------------------------------------------------
# OBJ I/O (ASCII, triangles only)

def load_obj(path) -> Mesh:
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise InputError(f"{path}:{lineno}: malformed vertex line")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [p.split("/")[0] for p in parts[1:]]
                if len(idx) != 3:
                    raise InputError(
                        f"{path}:{lineno}: only triangle faces are supported"
                    )
                faces.append([int(i) - 1 for i in idx])
    if not vertices:
        raise InputError(f"{path}: no vertices found")
    return Mesh(np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64))


def save_obj(mesh: Mesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write("v %.9g %.9g %.9g\n" % (v[0], v[1], v[2]))
        for f in mesh.faces:
            fh.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))


# ---------------------------------------------------------------------------
# Procedural shapes (test fixtures and the built-in template family)

def _merge_vertices(vertices, faces, decimals=9):
    keys = np.round(vertices, decimals)
    _, index, inverse = np.unique(
        keys.view([("x", "f8"), ("y", "f8"), ("z", "f8")]),
        return_index=True,
        return_inverse=True,
    )
    return vertices[index], inverse.reshape(-1)[faces]

def subdivided_cube(n: int = 4) -> Mesh:
    """Genus-0 watertight cube [-1, 1]^3 with n x n quads per side, triangulated."""
    if n < 1:
        raise InputError("subdivided_cube: n must be >= 1")
    grid = np.linspace(-1.0, 1.0, n + 1)
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    uu = uu.reshape(-1)
    vv = vv.reshape(-1)
    ones = np.ones_like(uu)
    # (axis, sign): plane at coordinate sign along axis, parameterized by (u, v)
    sides = [
        (np.stack([ones, uu, vv], 1), False),   # +x
        (np.stack([-ones, uu, vv], 1), True),   # -x
        (np.stack([uu, ones, vv], 1), True),    # +y
        (np.stack([uu, -ones, vv], 1), False),  # -y
        (np.stack([uu, vv, ones], 1), False),   # +z
        (np.stack([uu, vv, -ones], 1), True),   # -z
    ]
    all_v = []
    all_f = []
    offset = 0
    for pts, flip in sides:
        all_v.append(pts)
        idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
        a = idx[:-1, :-1].reshape(-1)
        b = idx[1:, :-1].reshape(-1)
        c = idx[1:, 1:].reshape(-1)
        d = idx[:-1, 1:].reshape(-1)
        quads = np.stack([a, b, c, d], 1)
        tris = np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]], axis=0)
        if flip:
            tris = tris[:, ::-1]
        all_f.append(tris + offset)
        offset += pts.shape[0]
    vertices = np.concatenate(all_v, axis=0)
    faces = np.concatenate(all_f, axis=0)
    vertices, faces = _merge_vertices(vertices, faces)
    mesh = Mesh(vertices, faces)
    check_watertight(mesh.faces, mesh.n_vertices)
    if signed_volume(mesh) < 0:
        mesh = Mesh(vertices, faces[:, ::-1])
    return mesh


def spherified_cube(n: int = 8, radius: float = 1.0) -> Mesh:
    """Sphere mesh built by normalizing a subdivided cube (6*n*n*2 faces)."""
    cube = subdivided_cube(n)
    v = cube.vertices
    v = v / np.linalg.norm(v, axis=1, keepdims=True) * radius
    return Mesh(v, cube.faces)


def box_ellipsoid_blend(
    n: int = 4,
    scale=(1.0, 1.0, 1.0),
    spherify: float = 0.0,
    taper: float = 0.0,
    shear: float = 0.0,
    normalize: bool = True,
) -> Mesh:
    """One sample of the parameterized box/ellipsoid family.

    ``spherify`` in [0, 1] blends the cube toward the unit sphere, ``taper``
    scales x/y linearly along z, ``shear`` slides x along z. The result is
    rescaled to bounding radius 1 when ``normalize`` is set.
    """
    cube = subdivided_cube(n)
    v = cube.vertices.copy()
    radial = v / np.linalg.norm(v, axis=1, keepdims=True)
    v = (1.0 - spherify) * v + spherify * radial
    v *= np.asarray(scale, dtype=np.float64)
    t = 1.0 + taper * 0.5 * v[:, 2:3]
    v[:, :2] *= np.clip(t, 0.1, None)
    v[:, 0] += shear * v[:, 2]
    if normalize:
        r = np.linalg.norm(v, axis=1).max()
        if r > 0:
            v /= r
    return Mesh(v, cube.faces)


def torus(
    major_radius: float = 0.7,
    minor_radius: float = 0.25,
    n_major: int = 32,
    n_minor: int = 16,
) -> Mesh:
    u = np.arange(n_major) * (2 * np.pi / n_major)
    w = np.arange(n_minor) * (2 * np.pi / n_minor)
    uu, ww = np.meshgrid(u, w, indexing="ij")
    x = (major_radius + minor_radius * np.cos(ww)) * np.cos(uu)
    y = (major_radius + minor_radius * np.cos(ww)) * np.sin(uu)
    z = minor_radius * np.sin(ww)
    vertices = np.stack([x.reshape(-1), y.reshape(-1), z.reshape(-1)], 1)

    idx = np.arange(n_major * n_minor).reshape(n_major, n_minor)
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(b, -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    quads = np.stack([a.reshape(-1), b.reshape(-1), c.reshape(-1), d.reshape(-1)], 1)
    faces = np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]], axis=0)
    mesh = Mesh(vertices, faces)
    check_watertight(mesh.faces, mesh.n_vertices)
    if signed_volume(mesh) < 0:
        mesh = Mesh(vertices, faces[:, ::-1])
    return mesh
