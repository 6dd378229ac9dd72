"""Image containers and file I/O.

A :class:`Raster` stores samples as float64 in [0,1], shaped (height, width,
channels) with 1, 3 or 4 channels. Files are read and written as 8-bit PNG or
binary PPM (P6), selected by extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidDimension

__all__ = ["Raster", "load_raster", "save_raster", "quantize"]


@dataclass(frozen=True)
class Raster:
    """Row-major image with intensity samples in [0,1]."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 3 or s.shape[2] not in (1, 3, 4):
            raise InvalidDimension(f"expected (h, w, c) samples with c in 1/3/4, got {s.shape}")
        if s.shape[0] < 1 or s.shape[1] < 1:
            raise InvalidDimension(f"empty raster {s.shape}")
        if not np.isfinite(s).all():
            raise InvalidDimension("raster contains non-finite samples")
        if s.min() < 0.0 or s.max() > 1.0:
            raise InvalidDimension("raster samples must lie in [0, 1]")

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def channels(self):
        return self.samples.shape[2]

    @classmethod
    def from_array(cls, arr):
        """Build a raster from an array, accepting (h, w) for single channel.

        Values are clamped to [0,1]; integer dtypes are scaled by 255.
        """
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            arr = arr.astype(np.float64) / 255.0
        else:
            arr = arr.astype(np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return cls(np.clip(arr, 0.0, 1.0))

    def as_gray(self):
        """Luminance plane as an (h, w) float array."""
        s = self.samples
        if self.channels == 1:
            return s[:, :, 0].copy()
        return 0.299 * s[:, :, 0] + 0.587 * s[:, :, 1] + 0.114 * s[:, :, 2]


def quantize(raster):
    """8-bit samples via round-half-even, shape (h, w, c)."""
    return np.rint(raster.samples * 255.0).astype(np.uint8)


def load_raster(path):
    """Read a PNG or PPM file into a :class:`Raster`."""
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA", "PA") or (im.mode == "P" and "transparency" in im.info):
            im = im.convert("RGBA")
        elif im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    return Raster.from_array(arr)


def save_raster(raster, path):
    """Write a raster as 8-bit PNG or binary PPM, chosen by file extension.

    PPM holds exactly three channels: gray is replicated, alpha dropped.
    """
    path = Path(path)
    arr = quantize(raster)
    ext = path.suffix.lower()
    if ext == ".ppm":
        if arr.shape[2] == 1:
            arr = np.repeat(arr, 3, axis=2)
        elif arr.shape[2] == 4:
            arr = arr[:, :, :3]
        Image.fromarray(arr, "RGB").save(path, format="PPM")
    elif ext == ".png":
        if arr.shape[2] == 1:
            Image.fromarray(arr[:, :, 0], "L").save(path, format="PNG")
        else:
            Image.fromarray(arr, "RGB" if arr.shape[2] == 3 else "RGBA").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image extension {ext!r} (use .png or .ppm)")
    return path
