"""contourrefine: single-sketch 3D reconstruction and editing by matching
projected external contours under a latent blendshape prior."""

from .camera import Camera, project, project_jacobian
from .chamfer2d import chamfer_loss, chamfer_loss_brute
from .contour import (
    SurfaceSampleSet,
    external_contour_of_mask,
    filter_sketch_external,
    lift_contour,
    sketch_to_mask,
)
from .errors import (
    ConnectivityError,
    EmptySketchError,
    InputError,
    MaskBorderError,
    NumericalError,
    OpenContourError,
)
from .estimators import BlendshapeModel, SketchReconstructor
from .mesh import Mesh, load_obj, save_obj
from .metrics import chamfer_3d, normal_consistency, sample_surface
from .raster import RasterBuffers, rasterize, render_mask, render_normal_map
from .refine import (
    RefinementConfig,
    RefinementTrace,
    chamfer_grad_code,
    optimize,
    partial_edit_loss,
    silhouette_loss,
)
from .shape_model import TemplateMesh, decode, fit_basis, initialize_code
from .sketch_synth import generate_dataset, render_occluding, render_sketchfd

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "project",
    "project_jacobian",
    "chamfer_loss",
    "chamfer_loss_brute",
    "SurfaceSampleSet",
    "external_contour_of_mask",
    "filter_sketch_external",
    "lift_contour",
    "sketch_to_mask",
    "ConnectivityError",
    "EmptySketchError",
    "InputError",
    "MaskBorderError",
    "NumericalError",
    "OpenContourError",
    "BlendshapeModel",
    "SketchReconstructor",
    "Mesh",
    "load_obj",
    "save_obj",
    "chamfer_3d",
    "normal_consistency",
    "sample_surface",
    "RasterBuffers",
    "rasterize",
    "render_mask",
    "render_normal_map",
    "RefinementConfig",
    "RefinementTrace",
    "chamfer_grad_code",
    "optimize",
    "partial_edit_loss",
    "silhouette_loss",
    "TemplateMesh",
    "decode",
    "fit_basis",
    "initialize_code",
    "generate_dataset",
    "render_occluding",
    "render_sketchfd",
    "__version__",
]
