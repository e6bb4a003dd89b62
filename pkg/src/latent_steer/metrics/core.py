"""Exact per-image property metrics.

All functions take an H x W x 3 float image in [0, 1]. Mask-based metrics
take a :class:`Mask`; see :mod:`latent_steer.metrics.masks`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.colors import rgb_to_hsv

from .masks import Mask, segment_largest

LUMA = np.array([0.299, 0.587, 0.114])


def _check(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an H x W x 3 image, got shape {img.shape}")
    return img


def grayscale(image) -> np.ndarray:
    return _check(image) @ LUMA


@dataclass(frozen=True)
class RednessThresholds:
    hue_window_deg: float = 20.0
    min_saturation: float = 0.3
    min_value: float = 0.2


def red_pixels(image, thresholds: RednessThresholds = RednessThresholds()) -> np.ndarray:
    hsv = rgb_to_hsv(np.clip(_check(image), 0.0, 1.0))
    hue = hsv[..., 0] * 360.0
    w = thresholds.hue_window_deg
    return (
        ((hue <= w) | (hue >= 360.0 - w))
        & (hsv[..., 1] > thresholds.min_saturation)
        & (hsv[..., 2] > thresholds.min_value)
    )


def redness(image, thresholds: RednessThresholds = RednessThresholds()) -> float:
    """Fraction of pixels whose hue is within the red window and that are
    saturated and bright enough to count."""
    return float(red_pixels(image, thresholds).mean())


def colorfulness(image) -> float:
    """Hasler-Suesstrunk colorfulness on the 0-255 scale."""
    img = _check(image) * 255.0
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    rg = r - g
    yb = 0.5 * (r + g) - b
    spread = np.sqrt(rg.var() + yb.var())
    centre = np.sqrt(rg.mean() ** 2 + yb.mean() ** 2)
    return float(spread + 0.3 * centre)


def brightness(image) -> float:
    return float(grayscale(image).mean())


def intensity_histogram(image) -> np.ndarray:
    levels = np.clip(np.rint(grayscale(image) * 255.0), 0, 255).astype(np.int64)
    return np.bincount(levels.ravel(), minlength=256)


def entropy_bits(image) -> float:
    hist = intensity_histogram(image)
    p = hist[hist > 0] / hist.sum()
    return float(max(0.0, -(p * np.log2(p)).sum()))


def simplicity(image) -> float:
    """``1 - H / 8`` where H is the 256-bin grey-level entropy in bits.

    Larger means simpler; a single-intensity image scores 1.
    """
    return 1.0 - entropy_bits(image) / 8.0


def object_size(mask: Mask, image_dims=None) -> float:
    h, w = image_dims if image_dims is not None else mask.grid.shape
    return mask.area / float(h * w)


def centeredness(mask: Mask, image_dims=None) -> float:
    """Distance from the mask centroid to the frame centre over the half-diagonal.

    Coordinates are pixel indices, so the centre is ((W-1)/2, (H-1)/2) and a
    corner pixel sits at distance 1. NaN for an empty mask.
    """
    if mask.area == 0:
        return float("nan")
    h, w = image_dims if image_dims is not None else mask.grid.shape
    half_diag = 0.5 * np.hypot(w - 1, h - 1)
    if half_diag == 0:
        return 0.0
    cx, cy = mask.centroid
    return float(np.hypot(cx - (w - 1) / 2.0, cy - (h - 1) / 2.0) / half_diag)


def squareness(mask: Mask) -> float:
    """Minor/major axis ratio of the moment-equivalent ellipse.

    NaN for masks with fewer than two pixels; 0.0 for collinear masks
    (check ``mask.degenerate``).
    """
    if mask.area < 2:
        return float("nan")
    lo, hi = mask.ellipse_eigenvalues()
    if hi <= 0:
        return float("nan")
    return float(np.sqrt(max(lo, 0.0) / hi))


METRIC_NAMES = (
    "redness",
    "colorfulness",
    "brightness",
    "simplicity",
    "entropy_bits",
    "object_size",
    "centeredness",
    "squareness",
)

# the seven properties proper; entropy_bits is the raw form of simplicity
SEVEN = ("redness", "colorfulness", "brightness", "simplicity", "object_size", "centeredness", "squareness")


def all_metrics(image, mask: Mask | None = None, threshold: float = 0.5,
                mode: str = "luminance",
                red: RednessThresholds = RednessThresholds()) -> dict[str, float]:
    img = _check(image)
    if mask is None:
        mask = segment_largest(img, threshold, mode)
    dims = img.shape[:2]
    ent = entropy_bits(img)
    return {
        "redness": redness(img, red),
        "colorfulness": colorfulness(img),
        "brightness": brightness(img),
        "simplicity": 1.0 - ent / 8.0,
        "entropy_bits": ent,
        "object_size": object_size(mask, dims),
        "centeredness": centeredness(mask, dims),
        "squareness": squareness(mask),
    }
