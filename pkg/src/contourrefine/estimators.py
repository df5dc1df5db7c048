"""Scikit-learn style estimators wrapping the functional core.

``BlendshapeModel`` plays the role of a PCA over vertex displacements with
mesh-aware fit/decode, and ``SketchReconstructor`` is the fit-shaped entry
point: fit it to a sketch plus camera and read the refined code and mesh off
the fitted attributes. Both expose ``get_params``/``set_params`` so they
compose with scikit-learn tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .camera import Camera
from .errors import InputError
from .mesh import Mesh
from .refine import RefinementConfig, optimize
from .shape_model import (
    TemplateMesh,
    decode,
    fit_basis,
    initialize_code,
    project_onto_basis,
)


class BlendshapeModel(BaseEstimator):
    """Principal displacement modes over a fixed-topology mesh family.

    Parameters
    ----------
    n_components : int
        Number of displacement modes to keep.
    """

    def __init__(self, n_components: int = 32):
        self.n_components = n_components

    def fit(self, meshes, y=None):
        """Fit the template from meshes with identical connectivity."""
        self.template_ = fit_basis(meshes, self.n_components)
        self.mean_ = self.template_.base_vertices
        self.components_ = self.template_.basis
        self.sigma_ = self.template_.sigma
        return self

    def _check_fitted(self):
        if not hasattr(self, "template_"):
            raise NotFittedError("BlendshapeModel is not fitted")

    def transform(self, meshes):
        """Least-squares codes of meshes under the fitted basis, (n, K)."""
        self._check_fitted()
        return np.stack([project_onto_basis(self.template_, m) for m in meshes])

    def inverse_transform(self, codes):
        """Decode codes back to meshes."""
        self._check_fitted()
        codes = np.atleast_2d(np.asarray(codes, dtype=np.float64))
        return [decode(self.template_, c) for c in codes]

    def decode(self, code) -> Mesh:
        self._check_fitted()
        return decode(self.template_, np.asarray(code, dtype=np.float64))


class SketchReconstructor(BaseEstimator):
    """Reconstruct a mesh from one camera-calibrated sketch.

    ``fit(sketch, camera)`` initializes the code by multi-start contour
    scoring, refines it with the chosen objective, and stores ``code_``,
    ``mesh_`` and ``trace_``. ``partial_fit(stroke, camera)`` applies a
    stroke edit on top of the current code.
    """

    def __init__(
        self,
        template: TemplateMesh | None = None,
        objective: str = "chamfer",
        steps: int = 400,
        step_size: float = 5e-3,
        t: float = 12.0,
        lambda_mask: float = 1.0,
        lambda_normal: float = 1.0,
        n_starts: int = 16,
        reanchor_every: int = 1,
        seed: int = 0,
    ):
        self.template = template
        self.objective = objective
        self.steps = steps
        self.step_size = step_size
        self.t = t
        self.lambda_mask = lambda_mask
        self.lambda_normal = lambda_normal
        self.n_starts = n_starts
        self.reanchor_every = reanchor_every
        self.seed = seed

    def _config(self) -> RefinementConfig:
        return RefinementConfig(
            steps=self.steps,
            step_size=self.step_size,
            t=self.t,
            lambda_mask=self.lambda_mask,
            lambda_normal=self.lambda_normal,
            reanchor_every=self.reanchor_every,
        )

    def _template(self) -> TemplateMesh:
        if self.template is None:
            raise InputError("SketchReconstructor requires a template")
        return self.template

    def fit(self, sketch, camera: Camera, y=None):
        from .contour import filter_sketch_external
        from .contour import sketch_to_mask

        template = self._template()
        code0 = initialize_code(
            sketch, camera, template, n_starts=self.n_starts, seed=self.seed
        )
        if self.objective == "silhouette":
            target = sketch_to_mask(sketch)
        else:
            target = filter_sketch_external(sketch)
        self.code_, self.trace_ = optimize(
            code0, self.objective, template, camera, target, self._config()
        )
        self.initial_code_ = code0
        self.mesh_ = decode(template, self.code_)
        self.camera_ = camera
        return self

    def partial_fit(self, stroke, camera: Camera):
        """Refine the current code against an editing stroke (partial
        objective); the pre-edit code is frozen as the locality reference."""
        if not hasattr(self, "code_"):
            raise NotFittedError("fit a sketch before editing")
        template = self._template()
        code0 = self.code_.copy()
        self.code_, self.trace_ = optimize(
            code0, "partial", template, camera, stroke, self._config(), code_ref=code0
        )
        self.mesh_ = decode(template, self.code_)
        self.camera_ = camera
        return self

    def predict(self, camera: Camera | None = None) -> Mesh:
        """The reconstructed mesh (cameras do not change the geometry)."""
        if not hasattr(self, "mesh_"):
            raise NotFittedError("SketchReconstructor is not fitted")
        return self.mesh_
