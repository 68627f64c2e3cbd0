"""Point-cloud quality via the winding clearness error.

The winding clearness error measures how crisply a raw point cloud's
winding-number field separates inside from outside: it is the residual of
a regularized least-squares fit of per-point surfels to the target field
values (1/2 at the samples, 0 on an enclosing box).  The error is
differentiable in the point coordinates, so it doubles as a denoising
loss.
"""

from .core import (BoxSamples, DegenerateCloudError, PointCloud, RngStream,
                   Transform, WindingConfig, add_gaussian_noise,
                   normalize_cloud, sample_bounding_box, sample_circle,
                   sample_rectangle, sample_sphere)
from .denoise import (AdamParams, BatchParams, DenoiseConfig, DenoiseTrace,
                      denoise, denoise_batched)
from .gradient import fd_gradient, grad_loss, grad_wce
from .kernel import kernel_mod, kernel_mod_jacobian
from .metrics import (MetricsReport, chamfer, f_score, mads,
                      normal_consistency, normals_from_surfels)
from .system import (AssembledSystem, SolveFailure, WceReport, assemble,
                     field_grid, solve_surfels, winding_clearness,
                     winding_field)

__all__ = [
    "AdamParams", "AssembledSystem", "BatchParams", "BoxSamples",
    "DegenerateCloudError", "DenoiseConfig", "DenoiseTrace", "MetricsReport",
    "PointCloud", "RngStream", "SolveFailure", "Transform", "WceReport",
    "WindingConfig", "add_gaussian_noise", "assemble", "chamfer", "denoise",
    "denoise_batched", "f_score", "fd_gradient", "field_grid", "grad_loss",
    "grad_wce", "kernel_mod", "kernel_mod_jacobian", "mads",
    "normal_consistency", "normalize_cloud", "normals_from_surfels",
    "sample_bounding_box", "sample_circle", "sample_rectangle",
    "sample_sphere", "solve_surfels", "winding_clearness", "winding_field",
]

__version__ = "0.1.0"
