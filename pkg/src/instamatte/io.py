"""PNG reading and writing for the raster types.

File conventions:

* RGB image: 8-bit 3-channel PNG.
* Alpha matte / gray map: single-channel 8-bit PNG, byte v encodes v/255.
* Binary mask: single-channel 8-bit PNG, 0 = background, nonzero = foreground.
* Trimap: single-channel 8-bit PNG holding exactly the bytes {0, 128, 255}.
* RGBA cut-out: 8-bit 4-channel PNG, unpremultiplied.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .core import round_half_up, trimap_decode, trimap_encode


def read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_rgb(path, image: np.ndarray) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)


def read_alpha(path) -> np.ndarray:
    with Image.open(path) as im:
        raster = np.asarray(im.convert("L"))
    return raster.astype(np.float64) / 255.0


def write_alpha(path, alpha: np.ndarray) -> None:
    raster = round_half_up(np.clip(alpha, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(raster, mode="L").save(path)


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        raster = np.asarray(im.convert("L"))
    return raster != 0


def write_mask(path, mask: np.ndarray) -> None:
    raster = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(raster, mode="L").save(path)


def read_trimap(path) -> np.ndarray:
    with Image.open(path) as im:
        raster = np.asarray(im.convert("L"))
    return trimap_decode(raster)


def write_trimap(path, trimap: np.ndarray) -> None:
    Image.fromarray(trimap_encode(trimap), mode="L").save(path)


def write_rgba(path, rgba: np.ndarray) -> None:
    Image.fromarray(np.asarray(rgba, dtype=np.uint8), mode="RGBA").save(path)


def read_rgba(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGBA"), dtype=np.uint8)
