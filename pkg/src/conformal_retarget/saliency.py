"""Automatic region-of-interest proposal from a saliency map.

Saliency is the spectral residual of the log-amplitude spectrum, computed on
a downscaled luminance plane and smoothed. ROIs are connected components of
the top-scoring pixel fraction after light morphological cleanup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import NoComponents

__all__ = ["SaliencyMap", "compute_saliency", "threshold_rois", "top_fraction_mask"]

_WORK_SIZE = 64
_SMOOTH_SIGMA = 2.5
_CLOSE_RADIUS = 2
_BORDER_CLEAR = 2
_MIN_AREA_FRACTION = 0.001


@dataclass(frozen=True)
class SaliencyMap:
    """Per-pixel scores in [0,1]; max is 1 unless the map is identically zero."""

    scores: np.ndarray

    @property
    def height(self):
        return self.scores.shape[0]

    @property
    def width(self):
        return self.scores.shape[1]


def _resize(plane, w, h):
    if plane.shape == (h, w):
        return plane
    im = Image.fromarray(plane.astype(np.float32), mode="F")
    return np.asarray(im.resize((w, h), Image.BILINEAR), float)


def compute_saliency(image):
    """Spectral-residual saliency of a raster, normalized to max 1.

    Deterministic; a constant image has no residual and scores zero
    everywhere.
    """
    gray = image.as_gray()
    h, w = gray.shape
    if gray.max() - gray.min() < 1e-12:
        return SaliencyMap(np.zeros((h, w)))

    scale = _WORK_SIZE / max(w, h)
    if scale < 1.0:
        ws = max(8, int(round(w * scale)))
        hs = max(8, int(round(h * scale)))
    else:
        ws, hs = w, h
    small = _resize(gray, ws, hs)

    spectrum = np.fft.fft2(small)
    amplitude = np.abs(spectrum)
    # relative floor keeps the residual invariant under intensity scaling
    log_amp = np.log(amplitude + 1e-12 * amplitude.max())
    residual = log_amp - ndimage.uniform_filter(log_amp, size=3, mode="nearest")
    back = np.fft.ifft2(np.exp(residual + 1j * np.angle(spectrum)))
    energy = np.abs(back) ** 2
    energy = ndimage.gaussian_filter(energy, _SMOOTH_SIGMA, mode="nearest")

    full = np.clip(_resize(energy, w, h), 0.0, None)
    top = full.max()
    if top > 0:
        full = full / top
    return SaliencyMap(full)


def _scores_of(saliency):
    return saliency.scores if hasattr(saliency, "scores") else np.asarray(saliency, float)


def top_fraction_mask(saliency, fraction):
    """Pixels scoring strictly above the (1 - fraction) quantile.

    This is the raw selection rule before any morphology; with all-distinct
    scores it keeps exactly floor(fraction * n) pixels.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    scores = _scores_of(saliency)
    cut = np.quantile(scores, 1.0 - fraction, method="inverted_cdf")
    return scores > cut


def _disk(radius):
    yy, xx = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return xx * xx + yy * yy <= radius * radius


def threshold_rois(saliency, fraction):
    """Connected high-saliency components as solver-ready boolean masks.

    The top ``fraction`` of pixels is closed with a radius-2 disk, pulled 2 px
    off the image border, split into 8-connected components, and components
    below 0.1% of the image area are dropped.

    :raises NoComponents: nothing survives (including all-tied scores)
    """
    mask = top_fraction_mask(saliency, fraction)
    h, w = mask.shape
    if mask.any():
        mask = ndimage.binary_closing(mask, structure=_disk(_CLOSE_RADIUS))
    mask[:_BORDER_CLEAR, :] = False
    mask[-_BORDER_CLEAR:, :] = False
    mask[:, :_BORDER_CLEAR] = False
    mask[:, -_BORDER_CLEAR:] = False

    labels, count = ndimage.label(mask, structure=np.ones((3, 3), int))
    min_area = _MIN_AREA_FRACTION * w * h
    out = []
    for k in range(1, count + 1):
        comp = labels == k
        if comp.sum() >= min_area:
            out.append(comp)
    if not out:
        raise NoComponents(f"no region of at least {min_area:.0f} px passed the threshold")
    return out
