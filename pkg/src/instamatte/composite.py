"""Compositing, matte quality metrics, and synthetic ground-truth scenes.

All blending follows the standard matting identity

    out = alpha * fg + (1 - alpha) * bg

computed per pixel and channel in real arithmetic, quantized half-up to
8 bits only at the very end, so alpha of exactly 0 or 1 copies the source
pixel bit-for-bit.

The synthetic generator builds scenes with a known ground-truth alpha
(feathered disk, soft rectangle, motion-streaked bar) plus a perturbed
coarse mask standing in for a detector's output, which is what the
end-to-end recovery tests run the pipeline against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import (
    BoundingBox,
    as_mask,
    bbox_of_mask,
    binary_dilate,
    binary_erode,
    require_same_shape,
    round_half_up,
)
from .errors import DimensionMismatchError, MatteError


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


def composite_pixelwise(fg: np.ndarray, bg: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Blend foreground over background with a per-pixel alpha map."""
    require_same_shape(fg, bg, alpha)
    a = np.asarray(alpha, dtype=np.float64)[..., None]
    blended = a * fg.astype(np.float64) + (1.0 - a) * bg.astype(np.float64)
    return _quantize(blended)


def layer_composite(image: np.ndarray, mattes, new_bg: np.ndarray) -> np.ndarray:
    """Layer every extracted instance of ``image`` over a new background, in order."""
    require_same_shape(image, new_bg)
    out = new_bg.astype(np.uint8, copy=True)
    for matte in mattes:
        out = composite_pixelwise(image, out, matte)
    return out


def extract_rgba(image: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Unpremultiplied RGBA cut-out: RGB copied straight, alpha quantized to 8 bits."""
    require_same_shape(image, alpha)
    a8 = _quantize(np.asarray(alpha, dtype=np.float64) * 255.0)
    return np.dstack([image.astype(np.uint8), a8])


@dataclass(frozen=True)
class MetricsReport:
    """Standard matting error triple over a scored pixel region."""

    sad: float
    mse: float
    gradient_error: float
    region: str
    pixels: int

    def to_text(self) -> str:
        return (
            f"sad={self.sad:.6f}\n"
            f"mse={self.mse:.8f}\n"
            f"gradient_error={self.gradient_error:.6f}\n"
            f"region={self.region}\n"
            f"pixels={self.pixels}\n"
        )

    def to_json_dict(self) -> dict:
        return {
            "sad": self.sad,
            "mse": self.mse,
            "gradient_error": self.gradient_error,
            "region": self.region,
            "pixels": self.pixels,
        }


def _sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    gx = ndimage.sobel(gray, axis=1, mode="reflect")
    gy = ndimage.sobel(gray, axis=0, mode="reflect")
    return np.hypot(gx, gy)


def metrics(
    alpha: np.ndarray,
    gt: np.ndarray,
    region: np.ndarray,
    region_label: str = "all",
) -> MetricsReport:
    """SAD, MSE and Sobel gradient error between a matte and its ground truth.

    Scored only over the true pixels of ``region``; gradients are taken on
    the full maps (3x3 Sobel) before restriction so the region boundary
    does not fabricate edges.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    region = as_mask(region)
    require_same_shape(alpha, gt, region)
    n = int(region.sum())
    if n == 0:
        raise MatteError("metrics region is empty")
    diff = alpha[region] - gt[region]
    grad_diff = _sobel_magnitude(alpha)[region] - _sobel_magnitude(gt)[region]
    return MetricsReport(
        sad=float(np.abs(diff).sum()),
        mse=float((diff**2).mean()),
        gradient_error=float((grad_diff**2).sum()),
        region=region_label,
        pixels=n,
    )


# -- synthetic scenes ---------------------------------------------------------


def make_synthetic(
    fg_rgba: np.ndarray,
    bg: np.ndarray,
    perturb_radius: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, BoundingBox]:
    """Composite a known foreground over a background and derive a coarse mask.

    Returns ``(image, gt_alpha, coarse_mask, bbox)``. The coarse mask is
    the 0.5-threshold of the ground-truth alpha, randomly dilated or eroded
    by up to ``perturb_radius`` pixels (seeded) to mimic the imprecision of
    detector masks; its tight bounding box plays the detector's box.
    """
    fg_rgba = np.asarray(fg_rgba, dtype=np.uint8)
    bg = np.asarray(bg, dtype=np.uint8)
    fh, fw = fg_rgba.shape[:2]
    bh, bw = bg.shape[:2]
    if fh > bh or fw > bw:
        raise DimensionMismatchError(
            f"foreground {fw}x{fh} does not fit background {bw}x{bh}"
        )
    y0 = (bh - fh) // 2
    x0 = (bw - fw) // 2

    gt_alpha = np.zeros((bh, bw), dtype=np.float64)
    gt_alpha[y0 : y0 + fh, x0 : x0 + fw] = fg_rgba[..., 3].astype(np.float64) / 255.0
    fg_full = np.zeros_like(bg)
    fg_full[y0 : y0 + fh, x0 : x0 + fw] = fg_rgba[..., :3]
    image = composite_pixelwise(fg_full, bg, gt_alpha)

    coarse = gt_alpha >= 0.5
    if perturb_radius > 0:
        rng = np.random.default_rng(seed)
        amount = int(rng.integers(0, perturb_radius + 1))
        grow = bool(rng.integers(0, 2))
        if amount > 0:
            perturbed = binary_dilate(coarse, amount) if grow else binary_erode(coarse, amount)
            if perturbed.any():
                coarse = perturbed
    return image, gt_alpha, coarse, bbox_of_mask(coarse)


def feathered_disk_alpha(size, radius: float = 40.0, feather: float = 4.0) -> np.ndarray:
    """Disk alpha with a linear feather band straddling the nominal radius."""
    h, w = size
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.hypot(yy - cy, xx - cx)
    return np.clip((radius - dist) / feather + 0.5, 0.0, 1.0)


def soft_rect_alpha(size, margin: int = 18, feather: float = 4.0) -> np.ndarray:
    """Rectangle alpha; fully opaque inside ``margin``, linear falloff at the edge."""
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w]
    inside = np.minimum.reduce([yy, h - 1 - yy, xx, w - 1 - xx]).astype(np.float64) - margin
    return np.clip(inside / feather + 0.5, 0.0, 1.0)


def motion_bar_alpha(size, core_half: int = 22, streak: int = 34, height_half: int = 14) -> np.ndarray:
    """Horizontal bar with long linear ramps on both ends, like motion blur."""
    h, w = size
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    along = np.clip((core_half + streak - np.abs(xx - cx)) / streak, 0.0, 1.0)
    across = np.clip((height_half - np.abs(yy - cy)) / 2.0 + 0.5, 0.0, 1.0)
    return along * across


_FIXTURE_ALPHAS = {
    "disk": feathered_disk_alpha,
    "rect": soft_rect_alpha,
    "motion-bar": motion_bar_alpha,
}

FIXTURE_KINDS = tuple(sorted(_FIXTURE_ALPHAS))

_FG_COLOR = np.array([232, 94, 60], dtype=np.float64)
_BG_LEFT = np.array([28, 76, 158], dtype=np.float64)
_BG_RIGHT = np.array([64, 132, 190], dtype=np.float64)


def gradient_background(size) -> np.ndarray:
    """Smooth horizontal color gradient used behind the synthetic foregrounds."""
    h, w = size
    ramp = np.linspace(0.0, 1.0, w)[None, :, None]
    bg = _BG_LEFT[None, None, :] * (1.0 - ramp) + _BG_RIGHT[None, None, :] * ramp
    return _quantize(np.broadcast_to(bg, (h, w, 3)).copy())


def make_fixture(kind: str, fg_size=(120, 120), bg_size=(160, 160)) -> tuple[np.ndarray, np.ndarray]:
    """Procedural (fg_rgba, background) pair for one fixture kind."""
    if kind not in _FIXTURE_ALPHAS:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    alpha = _FIXTURE_ALPHAS[kind](fg_size)
    rgb = np.broadcast_to(_FG_COLOR, (*fg_size, 3))
    fg_rgba = np.dstack([_quantize(rgb.copy()), _quantize(alpha * 255.0)])
    return fg_rgba, gradient_background(bg_size)
