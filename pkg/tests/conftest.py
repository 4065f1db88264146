"""Shared fixtures and independent oracles used across the suite."""

import numpy as np
import pytest

from instamatte.core import TRIMAP_BG, TRIMAP_FG, TRIMAP_UNKNOWN


def dilate_bruteforce(mask: np.ndarray, radius: float) -> np.ndarray:
    """Quadratic-time dilation oracle: true iff any true pixel within radius."""
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    for y in range(h):
        for x in range(w):
            if ys.size and (((ys - y) ** 2 + (xs - x) ** 2) <= radius**2).any():
                out[y, x] = True
    return out


def erode_bruteforce(mask: np.ndarray, radius: float) -> np.ndarray:
    """Erosion oracle with out-of-bounds counting as background."""
    h, w = mask.shape
    off = int(np.ceil(radius))
    out = np.zeros_like(mask, dtype=bool)
    for y in range(h):
        for x in range(w):
            keep = True
            for dy in range(-off, off + 1):
                for dx in range(-off, off + 1):
                    if dy * dy + dx * dx <= radius * radius:
                        yy, xx = y + dy, x + dx
                        if not (0 <= yy < h and 0 <= xx < w) or not mask[yy, xx]:
                            keep = False
                            break
                if not keep:
                    break
            out[y, x] = keep
    return out


def random_mask(rng, shape, p=0.5):
    return rng.random(shape) < p


def random_trimap(rng, shape):
    """Random trimap guaranteed to carry all three labels."""
    while True:
        u = rng.random(shape)
        t = np.full(shape, TRIMAP_UNKNOWN, dtype=np.uint8)
        t[u < 0.4] = TRIMAP_FG
        t[u > 0.7] = TRIMAP_BG
        if (t == TRIMAP_FG).any() and (t == TRIMAP_BG).any() and (t == TRIMAP_UNKNOWN).any():
            return t


def two_tone_image(h, w, split, band=0, left=(230, 230, 230), right=(20, 20, 20)):
    """Vertical two-tone image with an optional gray strip between the tones."""
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, : split - band] = left
    img[:, split + band :] = right
    if band:
        img[:, split - band : split + band] = 128
    return img


def two_tone_trimap(h, w, split, band):
    t = np.full((h, w), TRIMAP_UNKNOWN, dtype=np.uint8)
    t[:, : split - band] = TRIMAP_FG
    t[:, split + band :] = TRIMAP_BG
    return t


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
