"""Scene manifests: the JSON boundary where detector output enters.

A manifest names the image and lists instances, each with an id, class
label, optional confidence score, optional bounding box, and a mask given
either as a PNG path (relative paths resolve against the manifest file)
or as an embedded uncompressed RLE record. Missing boxes are derived from
the mask; missing scores default to 1.0.

Example document::

    {
      "image_path": "scene.png",
      "instances": [
        {"id": 1, "label": "person", "score": 0.97, "mask": "mask1.png"},
        {"id": 2, "label": "dog",
         "mask": {"size": [480, 640], "counts": [1200, 38, 600, ...]}}
      ]
    }

RLE follows the COCO convention: column-major runs, alternating starting
with background, so ``counts[0]`` may be 0 when the first pixel is
foreground.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BoundingBox, as_mask, bbox_of_mask
from .errors import ManifestError
from .io import read_mask, read_rgb
from .pipeline import InstanceAnnotation


def decode_rle(size, counts) -> np.ndarray:
    """Uncompressed column-major RLE to a binary mask."""
    h, w = int(size[0]), int(size[1])
    if h < 1 or w < 1:
        raise ManifestError(f"rle size must be positive, got {size}")
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ManifestError("rle counts must be non-negative")
    if sum(counts) != h * w:
        raise ManifestError(f"rle counts sum to {sum(counts)}, raster holds {h * w} pixels")
    flags = (np.arange(len(counts)) % 2).astype(bool)  # background first
    flat = np.repeat(flags, counts)
    return flat.reshape((h, w), order="F")


def encode_rle(mask: np.ndarray) -> list[int]:
    """Binary mask to canonical column-major RLE counts (no interior zero runs)."""
    flat = as_mask(mask).ravel(order="F").astype(np.int8)
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds).astype(int).tolist()
    if flat[0]:
        counts = [0] + counts
    return counts


@dataclass(frozen=True)
class ManifestInstance:
    id: object
    label: str
    score: float
    bbox: BoundingBox | None
    mask_path: str | None
    rle: tuple | None  # ((h, w), counts)


@dataclass(frozen=True)
class SceneManifest:
    image_path: str | None
    instances: tuple


def _field(entry: dict, index: int, name: str, types, required: bool = True, default=None):
    if name not in entry:
        if required:
            raise ManifestError(f"instances[{index}].{name}: missing required field")
        return default
    value = entry[name]
    if not isinstance(value, types):
        raise ManifestError(
            f"instances[{index}].{name}: expected {types}, got {type(value).__name__}"
        )
    return value


def parse_manifest(document) -> SceneManifest:
    """Validate a manifest document (dict or JSON text) into a SceneManifest."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ManifestError("manifest root must be a JSON object")
    image_path = document.get("image_path")
    if image_path is not None and not isinstance(image_path, str):
        raise ManifestError("image_path: expected a string")
    raw = document.get("instances")
    if not isinstance(raw, list):
        raise ManifestError("instances: expected a list")

    seen = set()
    instances = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ManifestError(f"instances[{i}]: expected an object")
        inst_id = _field(entry, i, "id", (int, str))
        if isinstance(inst_id, bool):
            raise ManifestError(f"instances[{i}].id: expected int or str")
        if inst_id in seen:
            raise ManifestError(f"instances[{i}].id: duplicate id {inst_id!r}")
        seen.add(inst_id)
        label = _field(entry, i, "label", str)
        score = _field(entry, i, "score", (int, float), required=False, default=1.0)
        if isinstance(score, bool) or not 0.0 <= float(score) <= 1.0:
            raise ManifestError(f"instances[{i}].score: must be a number in [0, 1]")

        bbox = None
        if "bbox" in entry:
            coords = entry["bbox"]
            if (
                not isinstance(coords, list)
                or len(coords) != 4
                or not all(isinstance(c, int) and not isinstance(c, bool) for c in coords)
            ):
                raise ManifestError(f"instances[{i}].bbox: expected [x0, y0, x1, y1] integers")
            try:
                bbox = BoundingBox(*coords)
            except ValueError as exc:
                raise ManifestError(f"instances[{i}].bbox: {exc}") from exc

        mask = _field(entry, i, "mask", (str, dict))
        mask_path = None
        rle = None
        if isinstance(mask, str):
            mask_path = mask
        else:
            size = mask.get("size")
            counts = mask.get("counts")
            if (
                not isinstance(size, list)
                or len(size) != 2
                or not all(isinstance(v, int) for v in size)
            ):
                raise ManifestError(f"instances[{i}].mask.size: expected [height, width]")
            if not isinstance(counts, list) or not all(
                isinstance(c, int) and not isinstance(c, bool) for c in counts
            ):
                raise ManifestError(f"instances[{i}].mask.counts: expected a list of integers")
            rle = ((size[0], size[1]), tuple(counts))

        instances.append(
            ManifestInstance(inst_id, label, float(score), bbox, mask_path, rle)
        )
    return SceneManifest(image_path, tuple(instances))


def load_scene(manifest_path, image_path=None):
    """Load a manifest file plus its image and fully resolved annotations.

    ``image_path`` overrides the manifest's own ``image_path``. Masks are
    loaded, checked against the image dimensions, and missing boxes are
    derived as each mask's tight bounding box.
    """
    manifest_path = Path(manifest_path)
    manifest = parse_manifest(manifest_path.read_text())
    base = manifest_path.parent

    source = image_path if image_path is not None else manifest.image_path
    if source is None:
        raise ManifestError("image_path: not in the manifest and none supplied")
    source = Path(source)
    if not source.is_absolute():
        source = base / source
    image = read_rgb(source)
    h, w = image.shape[:2]

    annotations = []
    for i, inst in enumerate(manifest.instances):
        if inst.mask_path is not None:
            path = Path(inst.mask_path)
            if not path.is_absolute():
                path = base / path
            try:
                mask = read_mask(path)
            except OSError as exc:
                raise ManifestError(f"instances[{i}].mask: cannot read {path} ({exc})") from exc
        else:
            size, counts = inst.rle
            mask = decode_rle(size, counts)
        if mask.shape != (h, w):
            raise ManifestError(
                f"instances[{i}].mask: {mask.shape[1]}x{mask.shape[0]} mask for a {w}x{h} image"
            )
        if not mask.any():
            raise ManifestError(f"instances[{i}].mask: mask is empty")
        bbox = inst.bbox if inst.bbox is not None else bbox_of_mask(mask)
        if bbox.x1 > w or bbox.y1 > h or bbox.x0 < 0 or bbox.y0 < 0:
            raise ManifestError(f"instances[{i}].bbox: {bbox} outside the {w}x{h} image")
        annotations.append(InstanceAnnotation(inst.id, inst.label, inst.score, bbox, mask))
    return image, annotations
