"""Perspective camera: look-at-origin rig and pinhole projection.

Conventions
-----------
World coordinates are right-handed with +z up. The camera sits at distance
``distance`` from the origin, at ``azimuth`` around +z (measured from the +x
axis) and ``elevation`` above the horizontal plane, looking at the origin.

The camera frame follows the computer-vision convention: x right, y down,
z forward, so a point in front of the camera has positive z. Continuous
pixel coordinates put the center of pixel (row i, col j) at
(u, v) = (j + 0.5, i + 0.5); u grows rightward with columns, v grows
downward with rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

_EPS_Z = 1e-9


@dataclass(frozen=True)
class Camera:
    azimuth: float
    elevation: float
    distance: float
    focal: float
    width: int = 256
    height: int = 256
    principal: tuple[float, float] | None = None  # (cx, cy), defaults to image center

    def __post_init__(self):
        if self.distance <= 0:
            raise InputError("camera: distance must be positive")
        if self.focal <= 0:
            raise InputError("camera: focal must be positive")
        if self.width <= 0 or self.height <= 0:
            raise InputError("camera: image size must be positive")

    @property
    def cx(self) -> float:
        return self.principal[0] if self.principal else self.width / 2.0

    @property
    def cy(self) -> float:
        return self.principal[1] if self.principal else self.height / 2.0

    @property
    def eye(self) -> np.ndarray:
        ce = math.cos(self.elevation)
        return self.distance * np.array(
            [ce * math.cos(self.azimuth), ce * math.sin(self.azimuth), math.sin(self.elevation)]
        )

    def rotation(self) -> np.ndarray:
        """World-to-camera rotation; rows are the camera axes (right, down, forward)."""
        eye = self.eye
        forward = -eye / np.linalg.norm(eye)
        up = np.array([0.0, 0.0, 1.0])
        if abs(forward @ up) > 1.0 - 1e-9:
            up = np.array([1.0, 0.0, 0.0])  # top/bottom view fallback
        right = np.cross(forward, up)
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        return np.stack([right, down, forward])

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return (points - self.eye) @ self.rotation().T

    @staticmethod
    def default_for(bounding_radius: float, width: int = 256, height: int = 256,
                    azimuth: float = 0.0, elevation: float = 0.0) -> "Camera":
        """Framing defaults: distance 3x bounding radius, focal 1.2x min(W, H)."""
        return Camera(
            azimuth=azimuth,
            elevation=elevation,
            distance=3.0 * bounding_radius,
            focal=1.2 * min(width, height),
            width=width,
            height=height,
        )

    # -- JSON interface (degrees at the file boundary, radians internally) --

    def to_json_dict(self) -> dict:
        return {
            "azimuth_deg": math.degrees(self.azimuth),
            "elevation_deg": math.degrees(self.elevation),
            "distance": self.distance,
            "focal_px": self.focal,
            "width": self.width,
            "height": self.height,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Camera":
        try:
            return Camera(
                azimuth=math.radians(float(d["azimuth_deg"])),
                elevation=math.radians(float(d["elevation_deg"])),
                distance=float(d["distance"]),
                focal=float(d["focal_px"]),
                width=int(d.get("width", 256)),
                height=int(d.get("height", 256)),
            )
        except KeyError as e:
            raise InputError(f"camera JSON: missing field {e.args[0]!r}") from None

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def load_json(path) -> "Camera":
        with open(path, "r", encoding="utf-8") as fh:
            return Camera.from_json_dict(json.load(fh))


def project(points: np.ndarray, camera: Camera) -> np.ndarray:
    """Project world points to continuous pixel coordinates (u, v).

    Raises if any point is at or behind the camera plane.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pc = camera.world_to_camera(pts.reshape(-1, 3))
    z = pc[:, 2]
    if np.any(z <= _EPS_Z):
        raise InputError("project: point at or behind the camera plane")
    uv = np.empty((pc.shape[0], 2))
    uv[:, 0] = camera.focal * pc[:, 0] / z + camera.cx
    uv[:, 1] = camera.focal * pc[:, 1] / z + camera.cy
    return uv[0] if single else uv


def project_jacobian(points: np.ndarray, camera: Camera) -> np.ndarray:
    """2x3 Jacobians d(u,v)/d(world point), stacked as (n, 2, 3)."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pc = camera.world_to_camera(pts.reshape(-1, 3))
    z = pc[:, 2]
    if np.any(z <= _EPS_Z):
        raise InputError("project_jacobian: point at or behind the camera plane")
    r = camera.rotation()
    # d(x/z)/dP = (R_x * z - x * R_z) / z^2, same for y
    jac = np.empty((pc.shape[0], 2, 3))
    jac[:, 0, :] = (r[0] * z[:, None] - pc[:, 0:1] * r[2]) / (z ** 2)[:, None]
    jac[:, 1, :] = (r[1] * z[:, None] - pc[:, 1:2] * r[2]) / (z ** 2)[:, None]
    jac *= camera.focal
    return jac[0] if single else jac
