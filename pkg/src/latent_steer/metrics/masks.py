"""Binary object masks: threshold segmentation, largest component, moments."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class Mask:
    """Binary grid with area, centroid and central second moments.

    Coordinates are (x, y) = (column, row) pixel indices. Moments are raw
    central sums; divide by ``area`` for the covariance.
    """

    grid: np.ndarray
    area: int = field(init=False)
    centroid: tuple[float, float] = field(init=False)
    mu20: float = field(init=False)
    mu02: float = field(init=False)
    mu11: float = field(init=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=bool)
        if self.grid.ndim != 2:
            raise ValueError("mask must be 2-D")
        ys, xs = np.nonzero(self.grid)
        self.area = int(xs.size)
        if self.area == 0:
            self.centroid = (float("nan"), float("nan"))
            self.mu20 = self.mu02 = self.mu11 = 0.0
            return
        cx, cy = xs.mean(), ys.mean()
        dx, dy = xs - cx, ys - cy
        self.centroid = (float(cx), float(cy))
        self.mu20 = float(dx @ dx)
        self.mu02 = float(dy @ dy)
        self.mu11 = float(dx @ dy)

    @property
    def empty(self) -> bool:
        return self.area == 0

    def ellipse_eigenvalues(self) -> tuple[float, float]:
        """(minor, major) eigenvalues of the normalised second-moment matrix."""
        if self.area == 0:
            return float("nan"), float("nan")
        a = self.mu20 / self.area
        c = self.mu02 / self.area
        b = self.mu11 / self.area
        mid = 0.5 * (a + c)
        rad = np.hypot(0.5 * (a - c), b)
        return float(mid - rad), float(mid + rad)

    @property
    def degenerate(self) -> bool:
        """True when all pixels are collinear (zero minor axis)."""
        if self.area < 2:
            return True
        lo, hi = self.ellipse_eigenvalues()
        return hi <= 0 or lo <= 1e-12 * hi


def foreground(image, threshold: float = 0.5, mode: str = "luminance") -> np.ndarray:
    """Boolean foreground.

    ``luminance``: grey level above ``threshold``.
    ``contrast``: max channel deviation from the median border colour above
    ``threshold``; suits dark or tinted backgrounds.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=2)
    if mode == "luminance":
        return img @ np.array([0.299, 0.587, 0.114]) > threshold
    if mode == "contrast":
        border = np.concatenate([img[0], img[-1], img[:, 0], img[:, -1]])
        bg = np.median(border, axis=0)
        return np.abs(img - bg).max(axis=2) > threshold
    raise ValueError(f"unknown segmentation mode {mode!r}")


def largest_component(fg: np.ndarray) -> np.ndarray:
    """Largest 8-connected component; ties go to the component whose first
    pixel in raster order comes first."""
    labels, n = ndimage.label(fg, structure=EIGHT_CONNECTED)
    if n == 0:
        return np.zeros_like(fg, dtype=bool)
    sizes = np.bincount(labels.ravel())[1:]
    flat = labels.ravel()
    firsts = np.full(n, flat.size)
    nz = np.nonzero(flat)[0]
    np.minimum.at(firsts, flat[nz] - 1, nz)
    best = min(range(n), key=lambda i: (-sizes[i], firsts[i]))
    return labels == best + 1


def segment_largest(image, threshold: float = 0.5, mode: str = "luminance") -> Mask:
    return Mask(largest_component(foreground(image, threshold, mode)))
