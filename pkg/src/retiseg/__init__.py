"""Two-stage segmentation of images with intensity inhomogeneity.

Stage one decouples an image into a smooth illumination and a piecewise
constant reflection by minimizing a strictly convex energy (tight-frame
or TV regularized) with a primal-dual saddle-point iteration.  Stage two
segments by thresholding the rescaled reflection into K phases, with no
extra solver work when thresholds or K change.
"""

from .bundle import Bundle, BundleError, read_bundle, write_bundle
from .image_io import (
    ImageIOError,
    load_field_raw,
    load_image,
    reflection_from_r,
    rescale_unit,
    save_field_raw,
    save_image,
    to_log_domain,
)
from .ops import (
    dual_radius,
    edge_weights,
    framelet_analyze,
    framelet_synthesize,
    gaussian_smooth,
    grad,
    grad_adjoint,
    operator_norm_estimate,
)
from .oracle import (
    SyntheticScene,
    pixel_qp_oracle,
    primal_descent_oracle,
    segmentation_accuracy,
    synth_biased_scene,
)
from .segment import LabelMap, Thresholds, phase_mask, render_overlay, threshold_phases
from .solver import (
    SolverConfig,
    SolverDivergenceError,
    SolverResult,
    audit_step_sizes,
    energy,
    run,
    solve_pixel_primal,
)

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "BundleError",
    "ImageIOError",
    "LabelMap",
    "SolverConfig",
    "SolverDivergenceError",
    "SolverResult",
    "SyntheticScene",
    "Thresholds",
    "audit_step_sizes",
    "dual_radius",
    "edge_weights",
    "energy",
    "framelet_analyze",
    "framelet_synthesize",
    "gaussian_smooth",
    "grad",
    "grad_adjoint",
    "load_field_raw",
    "load_image",
    "operator_norm_estimate",
    "phase_mask",
    "pixel_qp_oracle",
    "primal_descent_oracle",
    "read_bundle",
    "reflection_from_r",
    "render_overlay",
    "rescale_unit",
    "run",
    "save_field_raw",
    "save_image",
    "segmentation_accuracy",
    "solve_pixel_primal",
    "synth_biased_scene",
    "threshold_phases",
    "to_log_domain",
    "write_bundle",
]
