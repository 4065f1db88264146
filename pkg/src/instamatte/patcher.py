"""Patch-based inference over the unknown band.

Large inputs are first brought to a fixed working resolution. Each round
then crops random patches centered on not-yet-covered unknown pixels until
the whole unknown region is covered, mattes every patch, and averages the
overlaps. Running several rounds and taking the per-pixel median across
them rejects outlier patches and smooths seams.

Round blends use NaN for pixels no patch touched; those are resolved from
the trimap after aggregation (an unknown pixel left uncovered is a hard
error, never a silent fill).
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    require_same_shape,
    round_half_up,
    validate_trimap,
)
from .errors import NoUnknownRegionError, UncoveredUnknownError
from .matting import MattingRequest, matte_patch


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labels; independent of hash salting."""
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


# -- resampling -------------------------------------------------------------


def _axis_coords(dst_size: int, src_size: int):
    x = (np.arange(dst_size, dtype=np.float64) + 0.5) * (src_size / dst_size) - 0.5
    lo = np.floor(x)
    frac = x - lo
    lo = lo.astype(np.int64)
    hi = np.clip(lo + 1, 0, src_size - 1)
    lo = np.clip(lo, 0, src_size - 1)
    return lo, hi, frac


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of a float map or stack of channels (h, w[, c])."""
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[:2]
    y0, y1, fy = _axis_coords(out_h, h)
    x0, x1, fx = _axis_coords(out_w, w)
    fy = fy[:, None] if arr.ndim == 2 else fy[:, None, None]
    fx = fx[None, :] if arr.ndim == 2 else fx[None, :, None]
    top = (1.0 - fx) * arr[np.ix_(y0, x0)] + fx * arr[np.ix_(y0, x1)]
    bot = (1.0 - fx) * arr[np.ix_(y1, x0)] + fx * arr[np.ix_(y1, x1)]
    return (1.0 - fy) * top + fy * bot


def resize_nearest(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = arr.shape[:2]
    ys = np.clip(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), 0, h - 1)
    xs = np.clip(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), 0, w - 1)
    return arr[np.ix_(ys, xs)]


def resize_to_working(image: np.ndarray, trimap: np.ndarray, working) -> tuple[np.ndarray, np.ndarray]:
    """Bring an image and its trimap to the working resolution.

    The image is stretched bilinearly to exactly ``working`` (width,
    height); the trimap is resampled nearest-neighbor since its labels are
    categorical. Inputs already within the working size in both dimensions
    pass through untouched.
    """
    t = validate_trimap(trimap)
    require_same_shape(image, t)
    work_w, work_h = working
    h, w = t.shape
    if w <= work_w and h <= work_h:
        return image, t
    resized = resize_bilinear(image.astype(np.float64), work_h, work_w)
    resized = np.clip(round_half_up(resized), 0, 255).astype(np.uint8)
    return resized, resize_nearest(t, work_h, work_w)


# -- patch planning ---------------------------------------------------------


@dataclass(frozen=True)
class PatchPlan:
    """Patch centers covering the unknown region of one working trimap."""

    centers: tuple
    patch_size: int
    working_size: tuple
    rng_seed: int

    def origins(self):
        """Top-left corner of each patch, shifted minimally to stay in-bounds."""
        w, h = self.working_size
        return [patch_origin(c, self.patch_size, h, w) for c in self.centers]


def patch_origin(center, patch: int, h: int, w: int) -> tuple[int, int]:
    cy, cx = center
    y0 = min(max(cy - patch // 2, 0), h - patch)
    x0 = min(max(cx - patch // 2, 0), w - patch)
    return y0, x0


def sample_patch_centers(trimap: np.ndarray, patch: int, seed: int) -> PatchPlan:
    """Draw random unknown-pixel centers until every unknown pixel is covered.

    Each draw picks uniformly among the unknown pixels not yet inside any
    patch, so coverage terminates after finitely many patches and is
    reproducible for a fixed seed.
    """
    t = validate_trimap(trimap)
    h, w = t.shape
    if patch < 1 or patch > h or patch > w:
        raise ValueError(f"patch size {patch} does not fit a {w}x{h} raster")
    uncovered = t == TRIMAP_UNKNOWN
    if not uncovered.any():
        raise NoUnknownRegionError("trimap has no unknown pixels to cover")
    uncovered = uncovered.copy()
    rng = np.random.default_rng(seed)
    centers = []
    while uncovered.any():
        flat = np.flatnonzero(uncovered)
        pick = int(flat[rng.integers(flat.size)])
        center = divmod(pick, w)
        centers.append(center)
        y0, x0 = patch_origin(center, patch, h, w)
        uncovered[y0 : y0 + patch, x0 : x0 + patch] = False
    return PatchPlan(tuple(centers), patch, (w, h), seed)


# -- aggregation ------------------------------------------------------------


def blend_round(patches, dims) -> np.ndarray:
    """Average overlapping patch mattes onto one canvas.

    ``patches`` is a list of ``(alpha, (y0, x0))`` pairs. Pixels covered by
    no patch come back NaN (absent).
    """
    total = np.zeros(dims, dtype=np.float64)
    count = np.zeros(dims, dtype=np.int64)
    for alpha, (y0, x0) in patches:
        ph, pw = alpha.shape
        if y0 < 0 or x0 < 0 or y0 + ph > dims[0] or x0 + pw > dims[1]:
            raise ValueError(f"patch at ({y0}, {x0}) size {alpha.shape} exceeds {dims}")
        total[y0 : y0 + ph, x0 : x0 + pw] += alpha
        count[y0 : y0 + ph, x0 : x0 + pw] += 1
    out = np.full(dims, np.nan, dtype=np.float64)
    covered = count > 0
    out[covered] = total[covered] / count[covered]
    return out


def multi_sample_median(rounds, trimap: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel median across rounds, ignoring absent (NaN) values.

    An even number of participating values averages the two middle ones.
    Pixels absent in every round are resolved from the trimap (foreground
    to 1, background to 0); an unknown pixel absent everywhere signals a
    coverage bug upstream and raises.
    """
    if len(rounds) < 1:
        raise ValueError("need at least one round")
    stack = np.stack([np.asarray(r, dtype=np.float64) for r in rounds])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        med = np.nanmedian(stack, axis=0)
    absent = np.isnan(med)
    if absent.any():
        if trimap is None:
            raise UncoveredUnknownError("pixels absent from every round and no trimap to resolve them")
        t = validate_trimap(trimap)
        if t.shape != med.shape:
            raise ValueError("trimap dimensions do not match the rounds")
        if (absent & (t == TRIMAP_UNKNOWN)).any():
            raise UncoveredUnknownError("unknown pixel covered by no patch in any round")
        med[absent & (t == TRIMAP_FG)] = 1.0
        med[absent & (t == TRIMAP_BG)] = 0.0
    return med


# -- full patched inference ---------------------------------------------------


def run_patched(backend, image: np.ndarray, trimap: np.ndarray, cfg, seed: int) -> np.ndarray:
    """Patch-based matting of one image/trimap pair.

    Resizes to the working resolution, runs ``cfg.samples_k`` independent
    patch rounds (per-round seeds derived from ``seed``), medians them,
    brings the result back to the input resolution and re-imposes the
    original trimap's constraints. Deterministic for fixed inputs, config
    and seed.
    """
    t = validate_trimap(trimap)
    require_same_shape(image, t)
    if not (t == TRIMAP_UNKNOWN).any():
        return (t == TRIMAP_FG).astype(np.float64)

    work_img, work_t = resize_to_working(image, t, cfg.working_size)
    wh, ww = work_t.shape
    patch = min(cfg.patch_size, wh, ww)

    if not (work_t == TRIMAP_UNKNOWN).any():
        # the unknown band vanished under nearest-neighbor downsampling
        alpha_work = (work_t == TRIMAP_FG).astype(np.float64)
    else:
        rounds = []
        for k in range(cfg.samples_k):
            plan = sample_patch_centers(work_t, patch, derive_seed(seed, "round", k))
            patches = []
            for y0, x0 in plan.origins():
                request = MattingRequest(
                    work_img[y0 : y0 + patch, x0 : x0 + patch],
                    work_t[y0 : y0 + patch, x0 : x0 + patch],
                )
                patches.append((matte_patch(backend, request), (y0, x0)))
            rounds.append(blend_round(patches, work_t.shape))
        alpha_work = multi_sample_median(rounds, work_t)

    if alpha_work.shape == t.shape:
        alpha = alpha_work
    else:
        alpha = resize_bilinear(alpha_work, t.shape[0], t.shape[1])
    alpha = np.clip(alpha, 0.0, 1.0)
    alpha[t == TRIMAP_FG] = 1.0
    alpha[t == TRIMAP_BG] = 0.0
    return alpha
