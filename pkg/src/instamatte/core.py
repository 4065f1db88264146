"""Raster conventions, bounding boxes, and binary morphology.

Array conventions used throughout the package:

* RGB image    -- ``uint8`` array of shape ``(h, w, 3)``
* gray map     -- ``float64`` array of shape ``(h, w)``; alpha mattes are
  gray maps whose values lie in ``[0, 1]``
* binary mask  -- ``bool`` array of shape ``(h, w)``
* trimap       -- ``uint8`` array of shape ``(h, w)`` holding only the
  label bytes ``TRIMAP_BG`` (0), ``TRIMAP_UNKNOWN`` (128) and
  ``TRIMAP_FG`` (255)

The trimap byte values double as the on-disk encoding, so encode/decode
reduce to validation plus a copy.

Morphology uses a Euclidean disk structuring element of radius ``r``.
For erosion, pixels beyond the raster border count as background, so a
mask touching the frame edge erodes away from the border.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatchError, MalformedTrimapError

TRIMAP_BG = 0
TRIMAP_UNKNOWN = 128
TRIMAP_FG = 255

_TRIMAP_VALUES = frozenset((TRIMAP_BG, TRIMAP_UNKNOWN, TRIMAP_FG))


def round_half_up(x):
    """Round to the nearest integer with halves going up (2.5 -> 3)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box with exclusive upper coordinates."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate bounding box {self!r}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


def bbox_dimensions(b: BoundingBox) -> tuple[int, int]:
    """Return (width, height) of a bounding box."""
    return b.width, b.height


def bbox_of_mask(mask: np.ndarray) -> BoundingBox:
    """Tight bounding box of the true pixels of a mask."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise ValueError("cannot take the bounding box of an empty mask")
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def require_same_shape(*arrays) -> None:
    shapes = {a.shape[:2] for a in arrays}
    if len(shapes) > 1:
        raise DimensionMismatchError(f"raster dimensions differ: {sorted(shapes)}")


def as_mask(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"binary mask must be 2-d, got shape {m.shape}")
    return m.astype(bool, copy=False)


def binary_dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Dilate with a Euclidean disk: true where any true pixel is within ``radius``."""
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0 or not mask.any():
        return mask.copy()
    dist = ndimage.distance_transform_edt(~mask)
    return dist <= radius


def binary_erode(mask: np.ndarray, radius: float) -> np.ndarray:
    """Erode with a Euclidean disk; out-of-bounds pixels count as background.

    Defined as the complement of dilating the complement, taken on the
    plane where everything beyond the raster border is background.
    """
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return mask.copy()
    # Distance from each pixel to the nearest background-or-outside pixel.
    pad = int(np.ceil(radius)) + 1
    padded = np.pad(mask, pad, mode="constant", constant_values=False)
    dist = ndimage.distance_transform_edt(padded)
    return dist[pad:-pad, pad:-pad] > radius


def validate_trimap(trimap: np.ndarray) -> np.ndarray:
    """Check a uint8 raster holds only the three trimap label bytes."""
    t = np.asarray(trimap)
    if t.ndim != 2:
        raise MalformedTrimapError(f"trimap must be 2-d, got shape {t.shape}")
    bad = ~np.isin(t, (TRIMAP_BG, TRIMAP_UNKNOWN, TRIMAP_FG))
    if bad.any():
        values = sorted(int(v) for v in np.unique(t[bad]))
        raise MalformedTrimapError(f"trimap holds illegal byte values {values}")
    return t.astype(np.uint8, copy=False)


def trimap_encode(trimap: np.ndarray) -> np.ndarray:
    """Trimap to its byte raster (BG=0, Unknown=128, FG=255)."""
    return validate_trimap(trimap).copy()


def trimap_decode(raster: np.ndarray) -> np.ndarray:
    """Byte raster back to a trimap, rejecting any byte outside {0, 128, 255}."""
    return validate_trimap(raster).copy()


def trimap_from_masks(fg: np.ndarray, unknown: np.ndarray) -> np.ndarray:
    """Assemble a trimap from a foreground mask and an unknown mask.

    Foreground wins where the two overlap; everything else is background.
    """
    require_same_shape(fg, unknown)
    t = np.full(fg.shape, TRIMAP_BG, dtype=np.uint8)
    t[unknown] = TRIMAP_UNKNOWN
    t[fg] = TRIMAP_FG
    return t


def trimap_alpha_seed(trimap: np.ndarray) -> np.ndarray:
    """Initial alpha values implied by a trimap: 0 / 0.5 / 1."""
    t = validate_trimap(trimap)
    seed = np.full(t.shape, 0.5, dtype=np.float64)
    seed[t == TRIMAP_BG] = 0.0
    seed[t == TRIMAP_FG] = 1.0
    return seed
