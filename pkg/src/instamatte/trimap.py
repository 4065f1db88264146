"""Trimap estimation from instance masks and from earlier-pass alpha mattes.

The unknown band is what the matting stage works on. Its width is tied to
the object scale: a fixed fraction of the bounding box's width-and-height
average, re-derived (and shrunk) on every feedback pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    BoundingBox,
    as_mask,
    bbox_dimensions,
    binary_dilate,
    binary_erode,
    require_same_shape,
    round_half_up,
    trimap_from_masks,
    validate_trimap,
)
from .errors import DegenerateAlphaError, EmptyMaskError


@dataclass(frozen=True)
class TrimapParams:
    """Band-width fraction and the alpha thresholds used on feedback passes.

    Alpha values at or above ``hi_threshold`` seed foreground, at or below
    ``lo_threshold`` seed background; everything between stays unknown.
    """

    rate: float = 0.10
    hi_threshold: float = 0.95
    lo_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ValueError("rate must lie in (0, 1)")
        if not 0.0 <= self.lo_threshold < self.hi_threshold <= 1.0:
            raise ValueError("need 0 <= lo_threshold < hi_threshold <= 1")


def dilation_radius(bbox: BoundingBox, rate: float) -> int:
    """Band radius in pixels: rate times the bbox width-and-height average.

    Rounded half-up and clamped to at least one pixel so the feedback loop
    never freezes.
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    width, height = bbox_dimensions(bbox)
    return max(1, int(round_half_up(rate * (width + height) / 2.0)))


def _mask_centroid_pixel(mask: np.ndarray) -> tuple[int, int]:
    """Centroid of the true pixels, snapped to the nearest true pixel."""
    ys, xs = np.nonzero(mask)
    cy = float(ys.mean())
    cx = float(xs.mean())
    ry, rx = int(round_half_up(cy)), int(round_half_up(cx))
    if mask[ry, rx]:
        return ry, rx
    d2 = (ys - cy) ** 2 + (xs - cx) ** 2
    k = int(np.argmin(d2))  # ties resolve to the first pixel in scan order
    return int(ys[k]), int(xs[k])


def mask_to_trimap(mask: np.ndarray, radius: int) -> np.ndarray:
    """First-pass trimap from a coarse instance mask.

    Foreground is the mask eroded by ``radius``, background everything
    beyond the mask dilated by ``radius``, unknown the band between. When
    erosion leaves nothing (thin or small masks), the single pixel nearest
    the mask centroid becomes foreground so the matting solve always has
    an alpha=1 anchor.
    """
    mask = as_mask(mask)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if not mask.any():
        raise EmptyMaskError("instance mask has no foreground pixel")
    fg = binary_erode(mask, radius)
    if not fg.any():
        fg = np.zeros_like(mask)
        fg[_mask_centroid_pixel(mask)] = True
    unknown = binary_dilate(mask, radius) & ~fg
    return trimap_from_masks(fg, unknown)


def alpha_to_trimap(alpha: np.ndarray, radius: int, params: TrimapParams) -> np.ndarray:
    """Feedback-pass trimap from the previous pass's alpha matte.

    Near-saturated alpha values are treated as decided; the undecided set
    is then dilated by ``radius``, converting overlapped decided pixels
    back to unknown. A hard binary matte has no undecided seed pixels, so
    the band is instead the overlap of both decided sets dilated by
    ``radius`` (the band straddling the hard edge).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    fg_seed = alpha >= params.hi_threshold
    bg_seed = alpha <= params.lo_threshold
    if fg_seed.all() or bg_seed.all():
        raise DegenerateAlphaError(
            "alpha matte is entirely decided to one side; no object boundary to refine"
        )
    unknown_seed = ~fg_seed & ~bg_seed
    if unknown_seed.any():
        unknown = binary_dilate(unknown_seed, radius)
    else:
        unknown = binary_dilate(fg_seed, radius) & binary_dilate(bg_seed, radius)
    return trimap_from_masks(fg_seed & ~unknown, unknown)


def suppress_other_instances(trimap: np.ndarray, others, radius: int) -> np.ndarray:
    """Force the eroded interiors of other instances' masks to background.

    Erosion keeps the contested boundary band unknown, so overlapping
    dilated trimaps of adjacent objects stay resolvable; it never turns a
    background pixel into anything else.
    """
    t = validate_trimap(trimap).copy()
    for other in others:
        other = as_mask(other)
        require_same_shape(t, other)
        t[binary_erode(other, radius)] = TRIMAP_BG
    return t
