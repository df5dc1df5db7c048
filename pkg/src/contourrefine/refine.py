"""Refinement objectives and the first-order optimizer.

Three objectives drive the latent code:

* ``chamfer``: bidirectional 2D Chamfer distance between the projected
  external contour of the decoded mesh and the target contour pixels;
* ``silhouette``: mean squared difference between the rendered mask and a
  target foreground mask, with gradients obtained from a boundary shape
  derivative (moving contour anchors along the image-plane outward normal)
  instead of soft rasterization;
* ``partial``: Chamfer against an editing stroke restricted to its
  neighborhood, plus mask- and normal-map preservation terms that pin the
  surface wherever it projects further than ``t`` pixels from the stroke.

Within one step the anchor set (face ids, barycentric weights, nearest
neighbor structure, boundary coefficients) is frozen; gradients chain from
the 2D anchor positions through the projection Jacobian and the barycentric
combination to the decoder basis. Anchors are recomputed from a fresh
rasterization every ``reanchor_every`` steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._validation import check_binary_image, check_code, check_stroke_image
from .camera import Camera, project_jacobian
from .chamfer2d import assign_nearest, chamfer_with_assignments, nearest_distances
from .contour import SurfaceSampleSet, external_contour_of_mask, lift_contour
from .errors import InputError, NumericalError
from .images import pixel_centers, stroke_pixels
from .mesh import Mesh
from .raster import rasterize
from .shape_model import TemplateMesh, decode

_STRUCT_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class RefinementConfig:
    steps: int = 400
    step_size: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    reanchor_every: int = 1
    t: float = 12.0
    lambda_mask: float = 1.0
    lambda_normal: float = 1.0
    early_stop_rel: float = 1e-6
    early_stop_window: int = 25
    grad_tol: float = 1e-9  # infinity-norm below which the code counts as stationary
    snap_radius: float = 0.75  # partial-edit: anchors closer than this to the stroke are pinned onto it; kept off the 1 px lattice spacing so adjacent contour pixels never sit on the threshold
    record_codes: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise InputError("config: steps must be >= 1")
        if self.step_size <= 0:
            raise InputError("config: step_size must be positive")
        if self.reanchor_every < 1:
            raise InputError("config: reanchor_every must be >= 1")
        if self.t < 0:
            raise InputError("config: t must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    loss: float
    terms: dict
    code: np.ndarray | None = None


@dataclass
class RefinementTrace:
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise InputError("trace: step indices must be strictly increasing")
        self.records.append(record)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def final_loss(self) -> float:
        return self.records[-1].loss

    def term_names(self):
        names = []
        for r in self.records:
            for k in r.terms:
                if k not in names:
                    names.append(k)
        return names

    def to_csv(self, path) -> None:
        names = self.term_names()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "loss"] + names)
            for r in self.records:
                writer.writerow(
                    [r.step, repr(r.loss)] + [repr(r.terms.get(n, "")) for n in names]
                )


# ---------------------------------------------------------------------------
# shared chain rule: d(loss)/d(anchor uv) -> d(loss)/d(theta)

def _chain_to_code(
    template: TemplateMesh,
    mesh: Mesh,
    camera: Camera,
    anchors: SurfaceSampleSet,
    grad_uv: np.ndarray,
) -> np.ndarray:
    """Chain per-anchor 2D gradients through projection and barycentric
    interpolation to the latent code."""
    if len(anchors) == 0:
        return np.zeros(template.n_modes)
    points = anchors.realize(mesh)
    jac = project_jacobian(points, camera)                    # (n, 2, 3)
    grad_p = np.einsum("nij,ni->nj", jac, grad_uv)            # (n, 3)
    grad_v = np.zeros((template.n_vertices, 3))
    tri = template.faces[anchors.face_ids]                    # (n, 3)
    for corner in range(3):
        np.add.at(grad_v, tri[:, corner], anchors.bary[:, corner : corner + 1] * grad_p)
    return template.basis.T @ grad_v.reshape(-1)


def _boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """All covered pixels 8-adjacent to background (includes hole rims)."""
    m = mask.astype(bool)
    ring = ndimage.binary_dilation(~m, structure=_STRUCT_8) & m
    return np.argwhere(ring)


def _outward_normals(mask: np.ndarray, pixels: np.ndarray) -> np.ndarray:
    """Unit image-plane outward normals (u, v) at the given boundary pixels,
    estimated from a smoothed mask gradient."""
    smooth = ndimage.gaussian_filter(mask.astype(np.float64), 1.0)
    g_row, g_col = np.gradient(smooth)
    gu = g_col[pixels[:, 0], pixels[:, 1]]
    gv = g_row[pixels[:, 0], pixels[:, 1]]
    n = np.stack([-gu, -gv], axis=1)  # from foreground toward background
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    return np.divide(n, norms, out=np.zeros_like(n), where=norms > 1e-12)


def _sample_mask(img: np.ndarray, uv: np.ndarray) -> np.ndarray:
    h, w = img.shape
    col = np.clip(np.floor(uv[:, 0]).astype(np.int64), 0, w - 1)
    row = np.clip(np.floor(uv[:, 1]).astype(np.int64), 0, h - 1)
    return img[row, col].astype(np.float64)


def _boundary_coefficients(
    target_mask: np.ndarray, current_mask: np.ndarray, pixels: np.ndarray, normals: np.ndarray
) -> np.ndarray:
    """Per-anchor derivative of the mean squared mask difference with
    respect to outward boundary motion.

    Moving the boundary outward at pixel p sweeps roughly one pixel of area
    per unit displacement, flipping the rendered mask there; the squared
    difference changes by ``1 - 2 * target`` on the outside and by
    ``2 * target - 1`` when receding on the inside. Averaging the two
    one-sided slopes and rewriting them in terms of the difference field
    ``D = target - current`` gives ``-(D_out + D_in)``, which is exactly
    zero wherever the masks already agree.
    """
    centers = pixel_centers(pixels)
    diff = target_mask.astype(np.float64) - current_mask.astype(np.float64)
    d_out = _sample_mask(diff, centers + normals)
    d_in = _sample_mask(diff, centers - normals)
    hw = float(target_mask.size)
    return -(d_out + d_in) / hw


# ---------------------------------------------------------------------------
# objectives

class ChamferObjective:
    """Eq.-style bidirectional contour matching. ``target`` is a
    contour-role image (0 = contour pixel), e.g. a filtered sketch."""

    term_names = ("chamfer",)

    def __init__(self, template: TemplateMesh, camera: Camera, target: np.ndarray):
        self.template = template
        self.camera = camera
        target = check_binary_image(target, "target contour")
        self.target_centers = pixel_centers(stroke_pixels(target))
        if self.target_centers.shape[0] == 0:
            raise InputError("chamfer objective: target contour is empty")

    def anchor(self, theta: np.ndarray):
        mesh = decode(self.template, theta)
        buffers = rasterize(mesh, self.camera)
        cont = external_contour_of_mask(buffers.mask)
        anchors = lift_contour(buffers, cont)
        if len(anchors) == 0:
            raise InputError("chamfer objective: mesh projects to an empty contour")
        uv = anchors.project(mesh, self.camera)
        idx_pt, idx_tp = assign_nearest(uv, self.target_centers)
        return _ChamferState(anchors, idx_pt, idx_tp)

    def loss_and_grad(self, theta: np.ndarray, state):
        mesh = decode(self.template, theta)
        uv = state.anchors.project(mesh, self.camera)
        loss, grad_uv = chamfer_with_assignments(
            uv, self.target_centers, state.idx_pt, state.idx_tp
        )
        grad = _chain_to_code(self.template, mesh, self.camera, state.anchors, grad_uv)
        return loss, {"chamfer": loss}, grad

    def frozen_loss(self, theta: np.ndarray, state) -> float:
        mesh = decode(self.template, theta)
        uv = state.anchors.project(mesh, self.camera)
        return chamfer_with_assignments(
            uv, self.target_centers, state.idx_pt, state.idx_tp
        )[0]


@dataclass
class _ChamferState:
    anchors: SurfaceSampleSet
    idx_pt: np.ndarray
    idx_tp: np.ndarray


class SilhouetteObjective:
    """Mean squared foreground/background mask difference with
    boundary-shape-derivative gradients. ``target`` is a mask-role image."""

    term_names = ("silhouette",)

    def __init__(self, template: TemplateMesh, camera: Camera, target: np.ndarray):
        self.template = template
        self.camera = camera
        self.target = check_binary_image(target, "target mask")
        if not self.target.any():
            raise InputError("silhouette objective: target mask is empty")

    def anchor(self, theta: np.ndarray):
        mesh = decode(self.template, theta)
        buffers = rasterize(mesh, self.camera)
        pixels = _boundary_pixels(buffers.mask)
        if pixels.shape[0] == 0:
            raise InputError("silhouette objective: mesh projects to an empty mask")
        anchors = SurfaceSampleSet(
            face_ids=buffers.face_id[pixels[:, 0], pixels[:, 1]].astype(np.int64),
            bary=buffers.bary[pixels[:, 0], pixels[:, 1]].copy(),
            pixels=pixels.astype(np.int64),
        )
        normals = _outward_normals(buffers.mask, pixels)
        coeff = _boundary_coefficients(self.target, buffers.mask, pixels, normals)
        diff = self.target.astype(np.float64) - buffers.mask
        base_loss = float((diff ** 2).sum() / diff.size)
        uv0 = anchors.project(mesh, self.camera)
        return _SilhouetteState(anchors, normals, coeff, base_loss, uv0)

    def loss_and_grad(self, theta: np.ndarray, state):
        mesh = decode(self.template, theta)
        uv = state.anchors.project(mesh, self.camera)
        loss = state.base_loss + float(
            (state.coeff * ((uv - state.uv0) * state.normals).sum(axis=1)).sum()
        )
        grad_uv = state.coeff[:, None] * state.normals
        grad = _chain_to_code(self.template, mesh, self.camera, state.anchors, grad_uv)
        return loss, {"silhouette": loss}, grad

    def frozen_loss(self, theta: np.ndarray, state) -> float:
        mesh = decode(self.template, theta)
        uv = state.anchors.project(mesh, self.camera)
        return state.base_loss + float(
            (state.coeff * ((uv - state.uv0) * state.normals).sum(axis=1)).sum()
        )


@dataclass
class _SilhouetteState:
    anchors: SurfaceSampleSet
    normals: np.ndarray
    coeff: np.ndarray
    base_loss: float
    uv0: np.ndarray


class PartialEditObjective:
    """Stroke-local Chamfer matching plus locality regularizers.

    ``stroke`` is a contour-role image used directly as the filtered sketch.
    Pixels further than ``t`` from the stroke (distance transform) form the
    locality region where the rendered mask and normal map must stay close
    to their values at the frozen pre-edit code ``code0``.
    """

    term_names = ("chamfer", "mask", "normal")

    def __init__(
        self,
        template: TemplateMesh,
        camera: Camera,
        stroke: np.ndarray,
        code0: np.ndarray,
        config: "RefinementConfig",
    ):
        self.template = template
        self.camera = camera
        stroke = check_stroke_image(stroke, "stroke")
        self.stroke_centers = pixel_centers(stroke_pixels(stroke))
        self.config = config
        # 1_t: zero within distance t of the stroke, one further away
        dist = ndimage.distance_transform_edt(stroke)
        self.loc_mask = (dist >= config.t).astype(np.float64)
        self.code0 = check_code(code0, template.n_modes)
        buffers0 = rasterize(decode(template, self.code0), camera)
        self.mask0 = buffers0.mask.copy()
        self.normals0 = buffers0.normals.copy()

    def anchor(self, theta: np.ndarray):
        mesh = decode(self.template, theta)
        buffers = rasterize(mesh, self.camera)
        cont = external_contour_of_mask(buffers.mask)
        anchors = lift_contour(buffers, cont)
        if len(anchors) == 0:
            raise InputError("partial objective: mesh projects to an empty contour")
        uv = anchors.project(mesh, self.camera)
        # direction 1 (anchors -> stroke) only pins anchors already on the
        # stroke (sub-pixel snap); direction 2 (stroke -> anchors) pulls the
        # nearest piece of contour onto every stroke pixel. A stroke tracing
        # the current contour therefore scores exactly zero.
        d_pt = nearest_distances(uv, self.stroke_centers)
        snap_idx = np.flatnonzero(d_pt < self.config.snap_radius)
        idx_pt, idx_tp = assign_nearest(uv, self.stroke_centers)

        pixels = _boundary_pixels(buffers.mask)
        in_loc = self.loc_mask[pixels[:, 0], pixels[:, 1]] > 0
        pixels = pixels[in_loc]
        bnd = SurfaceSampleSet(
            face_ids=buffers.face_id[pixels[:, 0], pixels[:, 1]].astype(np.int64),
            bary=buffers.bary[pixels[:, 0], pixels[:, 1]].copy(),
            pixels=pixels.astype(np.int64),
        )
        normals = _outward_normals(buffers.mask, pixels)
        coeff = self.config.lambda_mask * _boundary_coefficients(
            self.mask0, buffers.mask, pixels, normals
        )

        hw = float(self.mask0.size)
        mask_term = self.config.lambda_mask * float(
            ((self.loc_mask * (buffers.mask.astype(np.float64) - self.mask0)) ** 2).sum() / hw
        )

        # per-face aggregation of the normal term over locality pixels
        covered = (buffers.face_id >= 0) & (self.loc_mask > 0)
        f_ids = buffers.face_id[covered]
        res0 = self.normals0[covered]
        n_faces = self.template.faces.shape[0]
        count = np.bincount(f_ids, minlength=n_faces).astype(np.float64)
        s0 = np.zeros((n_faces, 3))
        for d in range(3):
            s0[:, d] = np.bincount(f_ids, weights=res0[:, d], minlength=n_faces)
        q0 = np.bincount(
            f_ids, weights=(res0 ** 2).sum(axis=1), minlength=n_faces
        ).astype(np.float64)
        active = np.flatnonzero(count > 0)

        uv0 = bnd.project(mesh, self.camera) if len(bnd) else np.zeros((0, 2))
        return _PartialState(
            anchors=anchors,
            snap_idx=snap_idx,
            idx_pt=idx_pt,
            idx_tp=idx_tp,
            boundary=bnd,
            boundary_normals=normals,
            boundary_coeff=coeff,
            boundary_uv0=uv0,
            mask_term0=mask_term,
            face_ids=active,
            face_count=count[active],
            face_s0=s0[active],
            face_q0=q0[active],
        )

    # -- normal term helpers ------------------------------------------------

    def _face_normals(self, mesh: Mesh, face_ids: np.ndarray):
        tri = mesh.vertices[self.template.faces[face_ids]]
        a = tri[:, 1] - tri[:, 0]
        b = tri[:, 2] - tri[:, 0]
        c = np.cross(a, b)
        # camera-frame normals: rotate by the world->camera rotation
        rot = self.camera.rotation()
        c = c @ rot.T
        norm = np.linalg.norm(c, axis=1, keepdims=True)
        n = np.divide(c, norm, out=np.zeros_like(c), where=norm > 0)
        return a @ rot.T, b @ rot.T, c, n, norm

    def _normal_term_value(self, mesh: Mesh, state) -> float:
        if state.face_ids.size == 0:
            return 0.0
        _, _, _, n, _ = self._face_normals(mesh, state.face_ids)
        hw = float(self.mask0.size)
        per_face = state.face_count * (n ** 2).sum(axis=1) - 2.0 * (n * state.face_s0).sum(axis=1) + state.face_q0
        return self.config.lambda_normal * float(per_face.sum() / hw)

    def _normal_term_grad(self, mesh: Mesh, state) -> np.ndarray:
        if state.face_ids.size == 0:
            return np.zeros(self.template.n_modes)
        a, b, c, n, norm = self._face_normals(mesh, state.face_ids)
        hw = float(self.mask0.size)
        # d(term)/dN per face
        r = 2.0 * self.config.lambda_normal * (state.face_count[:, None] * n - state.face_s0) / hw
        # project through the normalization: dN/dc = (I - N N^T)/|c|
        w = (r - n * (n * r).sum(axis=1, keepdims=True)) / norm
        grad_v = np.zeros((self.template.n_vertices, 3))
        tri = self.template.faces[state.face_ids]
        # camera-frame gradients back to world frame: g_world = R^T g_cam
        rot = self.camera.rotation()
        g1 = np.cross(b, w) @ rot
        g2 = np.cross(w, a) @ rot
        g0 = np.cross(a - b, w) @ rot
        np.add.at(grad_v, tri[:, 0], g0)
        np.add.at(grad_v, tri[:, 1], g1)
        np.add.at(grad_v, tri[:, 2], g2)
        return self.template.basis.T @ grad_v.reshape(-1)

    # -- protocol ------------------------------------------------------------

    def _chamfer_part(self, theta, state):
        mesh = decode(self.template, theta)
        uv = state.anchors.project(mesh, self.camera)
        t = self.stroke_centers
        n_snap = max(state.snap_idx.shape[0], 1)
        diff_snap = uv[state.snap_idx] - t[state.idx_pt[state.snap_idx]]
        diff_pull = uv[state.idx_tp] - t
        loss = float((diff_snap ** 2).sum() / n_snap + (diff_pull ** 2).sum() / t.shape[0])
        grad_uv = np.zeros_like(uv)
        grad_uv[state.snap_idx] += (2.0 / n_snap) * diff_snap
        np.add.at(grad_uv, state.idx_tp, (2.0 / t.shape[0]) * diff_pull)
        return mesh, uv, loss, grad_uv

    def loss_and_grad(self, theta: np.ndarray, state):
        mesh, uv, cd, grad_uv = self._chamfer_part(theta, state)
        grad = _chain_to_code(self.template, mesh, self.camera, state.anchors, grad_uv)

        mask_term = state.mask_term0
        if len(state.boundary):
            uvb = state.boundary.project(mesh, self.camera)
            mask_term = state.mask_term0 + float(
                (state.boundary_coeff * ((uvb - state.boundary_uv0) * state.boundary_normals).sum(axis=1)).sum()
            )
            grad_b_uv = state.boundary_coeff[:, None] * state.boundary_normals
            grad = grad + _chain_to_code(
                self.template, mesh, self.camera, state.boundary, grad_b_uv
            )

        normal_term = self._normal_term_value(mesh, state)
        grad = grad + self._normal_term_grad(mesh, state)

        total = cd + mask_term + normal_term
        return total, {"chamfer": cd, "mask": mask_term, "normal": normal_term}, grad

    def frozen_loss(self, theta: np.ndarray, state) -> float:
        mesh, _, cd, _ = self._chamfer_part(theta, state)
        mask_term = state.mask_term0
        if len(state.boundary):
            uvb = state.boundary.project(mesh, self.camera)
            mask_term = state.mask_term0 + float(
                (state.boundary_coeff * ((uvb - state.boundary_uv0) * state.boundary_normals).sum(axis=1)).sum()
            )
        return cd + mask_term + self._normal_term_value(mesh, state)


@dataclass
class _PartialState:
    anchors: SurfaceSampleSet
    snap_idx: np.ndarray
    idx_pt: np.ndarray
    idx_tp: np.ndarray
    boundary: SurfaceSampleSet
    boundary_normals: np.ndarray
    boundary_coeff: np.ndarray
    boundary_uv0: np.ndarray
    mask_term0: float
    face_ids: np.ndarray
    face_count: np.ndarray
    face_s0: np.ndarray
    face_q0: np.ndarray


# ---------------------------------------------------------------------------
# functional wrappers

def make_objective(
    name: str,
    template: TemplateMesh,
    camera: Camera,
    target: np.ndarray,
    config: RefinementConfig | None = None,
    code0: np.ndarray | None = None,
):
    config = config or RefinementConfig()
    if name == "chamfer":
        return ChamferObjective(template, camera, target)
    if name == "silhouette":
        return SilhouetteObjective(template, camera, target)
    if name == "partial":
        if code0 is None:
            raise InputError("partial objective requires the frozen pre-edit code")
        return PartialEditObjective(template, camera, target, code0, config)
    raise InputError(f"unknown objective {name!r}")


def chamfer_grad_code(
    anchors: SurfaceSampleSet,
    template: TemplateMesh,
    code: np.ndarray,
    camera: Camera,
    target: np.ndarray,
):
    """Loss and d(loss)/d(code) of the contour Chamfer objective with a
    fixed anchor set. ``target`` is a contour-role image."""
    obj = ChamferObjective(template, camera, target)
    theta = check_code(code, template.n_modes)
    uv = anchors.project(decode(template, theta), camera)
    idx_pt, idx_tp = assign_nearest(uv, obj.target_centers)
    loss, _, grad = obj.loss_and_grad(theta, _ChamferState(anchors, idx_pt, idx_tp))
    return loss, grad


def silhouette_loss(
    code: np.ndarray, target_mask: np.ndarray, template: TemplateMesh, camera: Camera
):
    """Mask objective value and gradient at ``code`` (anchors computed here)."""
    obj = SilhouetteObjective(template, camera, target_mask)
    theta = check_code(code, template.n_modes)
    state = obj.anchor(theta)
    loss, _, grad = obj.loss_and_grad(theta, state)
    return loss, grad


def partial_edit_loss(
    code: np.ndarray,
    code0: np.ndarray,
    stroke: np.ndarray,
    template: TemplateMesh,
    camera: Camera,
    config: RefinementConfig | None = None,
):
    """Partial-edit objective value and gradient at ``code``."""
    config = config or RefinementConfig()
    obj = PartialEditObjective(template, camera, stroke, code0, config)
    theta = check_code(code, template.n_modes)
    state = obj.anchor(theta)
    loss, _, grad = obj.loss_and_grad(theta, state)
    return loss, grad


# ---------------------------------------------------------------------------
# optimizer

def optimize(
    code0: np.ndarray,
    objective: str,
    template: TemplateMesh,
    camera: Camera,
    target: np.ndarray,
    config: RefinementConfig | None = None,
    code_ref: np.ndarray | None = None,
    callback=None,
):
    """Run adaptive first-order refinement of a latent code.

    ``target`` is the objective's image input (contour image, mask, or
    stroke). For the partial objective ``code_ref`` is the frozen pre-edit
    code; it defaults to ``code0``. Returns ``(code, trace)``. The run stops
    early once relative loss improvement over the early-stop window falls
    under the configured threshold, or when ``callback(step, loss, code)``
    returns False.
    """
    config = config or RefinementConfig()
    theta = check_code(code0, template.n_modes)
    theta = template.clamp(theta)
    obj = make_objective(
        objective, template, camera, target, config,
        code0=theta.copy() if code_ref is None else check_code(code_ref, template.n_modes),
    )

    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace = RefinementTrace()
    state = None
    best_loss = np.inf
    last_improvement = 0
    for step in range(config.steps):
        try:
            if state is None or step % config.reanchor_every == 0:
                state = obj.anchor(theta)
            loss, terms, grad = obj.loss_and_grad(theta, state)
        except InputError as e:
            raise type(e)(f"{e} (at step {step})") from e
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NumericalError("non-finite objective value or gradient", step=step)

        trace.append(
            TraceRecord(
                step=step,
                loss=loss,
                terms=terms,
                code=theta.copy() if config.record_codes else None,
            )
        )
        if callback is not None and callback(step, loss, theta) is False:
            break
        if np.abs(grad).max() < config.grad_tol and np.abs(m).max() < config.grad_tol:
            break  # stationary: Adam would otherwise amplify float noise

        # adaptive first-order update with bias correction
        t = step + 1
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        m_hat = m / (1.0 - config.beta1 ** t)
        v_hat = v / (1.0 - config.beta2 ** t)
        theta = theta - config.step_size * m_hat / (np.sqrt(v_hat) + 1e-8)
        theta = template.clamp(theta)

        if not np.isfinite(best_loss) or loss < best_loss - config.early_stop_rel * max(
            abs(best_loss), 1e-12
        ):
            best_loss = loss
            last_improvement = step
        if step - last_improvement >= config.early_stop_window:
            break
    return theta, trace
