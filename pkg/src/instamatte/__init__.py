"""Automatic instance matting and compositing.

From an RGB image and coarse per-instance masks: estimate trimaps, refine
them through patch-based matting with a feedback loop, and emit per-instance
alpha mattes, cut-outs and composites.
"""

from .core import (
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    BoundingBox,
    bbox_dimensions,
    bbox_of_mask,
    binary_dilate,
    binary_erode,
    trimap_decode,
    trimap_encode,
)
from .composite import (
    MetricsReport,
    composite_pixelwise,
    extract_rgba,
    layer_composite,
    make_fixture,
    make_synthetic,
    metrics,
)
from .errors import MatteError
from .manifest import decode_rle, encode_rle, load_scene, parse_manifest
from .matting import (
    ExternalProcessBackend,
    MattingRequest,
    ReferenceBackend,
    SolverParams,
    build_matting_laplacian,
    matte_patch,
    solve_alpha,
)
from .patcher import (
    PatchPlan,
    blend_round,
    multi_sample_median,
    resize_to_working,
    run_patched,
    sample_patch_centers,
)
from .pipeline import (
    InstanceAnnotation,
    InstanceFailure,
    InstanceMatteResult,
    PipelineConfig,
    matte_all,
    matte_instance,
)
from .trimap import (
    TrimapParams,
    alpha_to_trimap,
    dilation_radius,
    mask_to_trimap,
    suppress_other_instances,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "ExternalProcessBackend",
    "InstanceAnnotation",
    "InstanceFailure",
    "InstanceMatteResult",
    "MattingRequest",
    "MatteError",
    "MetricsReport",
    "PatchPlan",
    "PipelineConfig",
    "ReferenceBackend",
    "SolverParams",
    "TrimapParams",
    "TRIMAP_BG",
    "TRIMAP_FG",
    "TRIMAP_UNKNOWN",
    "alpha_to_trimap",
    "bbox_dimensions",
    "bbox_of_mask",
    "binary_dilate",
    "binary_erode",
    "blend_round",
    "build_matting_laplacian",
    "composite_pixelwise",
    "decode_rle",
    "dilation_radius",
    "encode_rle",
    "extract_rgba",
    "layer_composite",
    "load_scene",
    "make_fixture",
    "make_synthetic",
    "mask_to_trimap",
    "matte_all",
    "matte_instance",
    "matte_patch",
    "metrics",
    "multi_sample_median",
    "parse_manifest",
    "resize_to_working",
    "run_patched",
    "sample_patch_centers",
    "solve_alpha",
    "suppress_other_instances",
    "trimap_decode",
    "trimap_encode",
]
