"""Per-instance matting loop and multi-instance scheduling.

Each instance runs independently: an initial trimap from its coarse mask,
then a fixed number of feedback passes in which the previous alpha matte
is re-thresholded into a tighter trimap whose band radius decays
geometrically. Other instances' eroded masks are forced to background in
every trimap so adjacent objects cannot claim each other's interior.

Seeds are derived from the config seed, the instance id and the pass
index, never from list positions, so permuting the input instances
permutes the outputs and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoundingBox, as_mask, require_same_shape
from .errors import MatteError, PipelineStageError
from .matting import ReferenceBackend, SolverParams
from .patcher import derive_seed, run_patched
from .trimap import TrimapParams, alpha_to_trimap, dilation_radius, mask_to_trimap, suppress_other_instances


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the feedback pipeline, with the paper-scale defaults."""

    passes: int = 4
    samples_k: int = 10
    patch_size: int = 320
    working_size: tuple = (640, 640)
    initial_rate: float = 0.10
    rate_decay: float = 0.5
    trimap_params: TrimapParams = field(default_factory=TrimapParams)
    solver: SolverParams = field(default_factory=SolverParams)
    seed: int = 0

    def __post_init__(self):
        if self.passes < 1 or self.samples_k < 1:
            raise ValueError("passes and samples_k must be >= 1")
        if not 0.0 < self.rate_decay <= 1.0:
            raise ValueError("rate_decay must lie in (0, 1]")
        if not 0.0 < self.initial_rate < 1.0:
            raise ValueError("initial_rate must lie in (0, 1)")
        if self.patch_size < 3:
            raise ValueError("patch_size must be >= 3")


@dataclass(frozen=True)
class InstanceAnnotation:
    """One detected object: label, confidence, box and coarse binary mask."""

    id: object
    label: str
    score: float
    bbox: BoundingBox
    mask: np.ndarray


@dataclass(frozen=True)
class InstanceMatteResult:
    instance_id: object
    final_alpha: np.ndarray
    per_pass: tuple | None = None  # ((trimap, alpha) per pass) when history is kept


@dataclass(frozen=True)
class InstanceFailure:
    instance_id: object
    pass_index: int | None
    message: str


def pass_radii(bbox: BoundingBox, cfg: PipelineConfig) -> list[int]:
    """Band radius per pass: the initial rate decayed geometrically, floor 1 px."""
    return [
        dilation_radius(bbox, cfg.initial_rate * cfg.rate_decay**p) for p in range(cfg.passes)
    ]


def _validate_instance(image: np.ndarray, inst: InstanceAnnotation) -> None:
    mask = as_mask(inst.mask)
    require_same_shape(image, mask)
    if not mask.any():
        raise MatteError(f"instance {inst.id!r} has an empty mask")
    h, w = mask.shape
    b = inst.bbox
    if b.x0 < 0 or b.y0 < 0 or b.x1 > w or b.y1 > h:
        raise MatteError(f"instance {inst.id!r} bbox {b} outside the {w}x{h} image")
    if not 0.0 <= inst.score <= 1.0:
        raise MatteError(f"instance {inst.id!r} score {inst.score} outside [0, 1]")


def matte_instance(
    image: np.ndarray,
    inst: InstanceAnnotation,
    others,
    cfg: PipelineConfig,
    backend=None,
    history: bool = False,
) -> InstanceMatteResult:
    """Run the full feedback loop for one instance.

    ``others`` are the coarse masks of every other instance in the scene;
    their eroded interiors are suppressed to background in each pass's
    trimap. Stage failures re-raise tagged with the instance id and pass
    index.
    """
    _validate_instance(image, inst)
    if backend is None:
        backend = ReferenceBackend(cfg.solver)
    radii = pass_radii(inst.bbox, cfg)

    try:
        trimap = suppress_other_instances(mask_to_trimap(inst.mask, radii[0]), others, radii[0])
    except MatteError as exc:
        raise PipelineStageError(inst.id, 0, exc) from exc

    per_pass = []
    alpha = None
    for p in range(1, cfg.passes + 1):
        seed = derive_seed(cfg.seed, "instance", inst.id, "pass", p)
        try:
            alpha = run_patched(backend, image, trimap, cfg, seed)
        except MatteError as exc:
            raise PipelineStageError(inst.id, p, exc) from exc
        if history:
            per_pass.append((trimap, alpha))
        if p < cfg.passes:
            radius = radii[p]
            try:
                trimap = suppress_other_instances(
                    alpha_to_trimap(alpha, radius, cfg.trimap_params), others, radius
                )
            except MatteError as exc:
                raise PipelineStageError(inst.id, p, exc) from exc
    return InstanceMatteResult(inst.id, alpha, tuple(per_pass) if history else None)


def matte_all(
    image: np.ndarray,
    instances,
    cfg: PipelineConfig,
    backend=None,
    labels=None,
    min_score: float = 0.0,
    history: bool = False,
) -> list:
    """Matte every (selected) instance of a scene, one at a time.

    Suppressors for each instance are all other annotated instances'
    masks, including ones excluded by the label or score filter: an
    excluded detection is still known background for its neighbors.
    A failing instance yields an :class:`InstanceFailure` entry; the rest
    of the scene still completes. Results follow the input order.
    """
    instances = list(instances)
    if not instances:
        raise MatteError("at least one instance annotation is required")
    ids = [inst.id for inst in instances]
    if len(set(ids)) != len(ids):
        raise MatteError(f"instance ids are not unique: {ids}")
    if labels is not None:
        labels = set(labels)

    results = []
    for i, inst in enumerate(instances):
        if labels is not None and inst.label not in labels:
            continue
        if inst.score < min_score:
            continue
        others = [other.mask for j, other in enumerate(instances) if j != i]
        try:
            results.append(matte_instance(image, inst, others, cfg, backend, history))
        except PipelineStageError as exc:
            results.append(InstanceFailure(inst.id, exc.pass_index, str(exc)))
        except MatteError as exc:
            results.append(InstanceFailure(inst.id, None, str(exc)))
    return results
