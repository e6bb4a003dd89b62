"""Differentiable Gaussian-blob generator with the call shape ``G(z, y)``.

Each blob k reads four latent coordinates: horizontal and vertical centre
(squashed to [0, 1] by ``(tanh + 1) / 2``), log-radius, and an intensity
weight. The class vector mixes rows of a palette to colour the blobs, so
``y`` changes colour statistics and never geometry. Latent coordinates past
``4 * n_blobs`` are ignored.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad


def default_palette(n_classes: int, n_blobs: int, seed: int = 0) -> np.ndarray:
    """Saturated random hues per (class, blob); shape (n_classes, n_blobs, 3)."""
    rng = np.random.default_rng(seed)
    pal = np.empty((n_classes, n_blobs, 3))
    for c in range(n_classes):
        for k in range(n_blobs):
            h = rng.uniform()
            s = rng.uniform(0.7, 1.0)
            pal[c, k] = colorsys.hsv_to_rgb(h, s, 1.0)
    return pal


@dataclass
class ToyGeneratorConfig:
    side: int = 64
    n_blobs: int = 4
    n_classes: int = 8
    base_radius: float = 0.15
    radius_scale: float = 0.5
    gain: float = 4.0
    bias: float = 3.0
    palette_seed: int = 0
    palette: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.side < 8:
            raise ValueError("image side must be at least 8")
        if self.n_blobs < 1:
            raise ValueError("need at least one blob")
        if self.palette is None:
            self.palette = default_palette(self.n_classes, self.n_blobs, self.palette_seed)
        self.palette = np.asarray(self.palette, dtype=np.float64)
        if self.palette.shape != (self.n_classes, self.n_blobs, 3):
            raise ValueError(
                f"palette shape {self.palette.shape} != {(self.n_classes, self.n_blobs, 3)}"
            )
        if self.palette.min() < 0 or self.palette.max() > 1:
            raise ValueError("palette entries must lie in [0, 1]")

    @property
    def min_latent_dim(self) -> int:
        return 4 * self.n_blobs

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "n_blobs": self.n_blobs,
            "n_classes": self.n_classes,
            "base_radius": self.base_radius,
            "radius_scale": self.radius_scale,
            "gain": self.gain,
            "bias": self.bias,
            "palette_seed": self.palette_seed,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "ToyGeneratorConfig":
        d = dict(d or {})
        if d.get("palette") is not None:
            d["palette"] = np.asarray(d["palette"], dtype=np.float64)
        return cls(**d)


class ToyGenerator:
    """``G(z, y)`` for batches: z (B, d_z), y (B, n_classes) -> images (B, S, S, 3)."""

    def __init__(self, config: ToyGeneratorConfig | None = None):
        self.config = config or ToyGeneratorConfig()
        s = self.config.side
        self._axis = (np.arange(s) + 0.5) / s
        k = self.config.n_blobs
        self._pal2d = self.config.palette.reshape(self.config.n_classes, k * 3)

    def __call__(self, z, y) -> ad.Tensor:
        cfg = self.config
        z = ad._as_tensor(z)
        y = ad._as_tensor(y)
        if z.data.ndim == 1:
            return ad.reshape(self(ad.reshape(z, (1, -1)), ad.reshape(y, (1, -1))), (cfg.side, cfg.side, 3))
        b, dz = z.shape
        k = cfg.n_blobs
        if dz < cfg.min_latent_dim:
            raise ValueError(f"latent dim {dz} too small for {k} blobs (need {4 * k})")
        if y.shape != (b, cfg.n_classes):
            raise ad.ShapeError(f"class batch shape {y.shape} != {(b, cfg.n_classes)}")
        s = cfg.side
        ones = np.ones((b, k))

        cx = ad.scale(ad.add(ad.tanh(ad.slice_(z, 1, 0, k)), ones), 0.5)
        cy = ad.scale(ad.add(ad.tanh(ad.slice_(z, 1, k, 2 * k)), ones), 0.5)
        # 1 / (2 r^2) with r = r0 * exp(s * zr)
        inv = ad.scale(
            ad.exp(ad.scale(ad.slice_(z, 1, 2 * k, 3 * k), -2.0 * cfg.radius_scale)),
            1.0 / (2.0 * cfg.base_radius ** 2),
        )
        w = ad.scale(ad.add(ad.tanh(ad.slice_(z, 1, 3 * k, 4 * k)), ones), cfg.gain)

        # exp(-|p - c|^2 inv) = exp(-(px - cx)^2 inv) * exp(-(py - cy)^2 inv) on the
        # pixel grid, so per-axis profiles combine through one batched matmul.
        prof = (b, k, s)
        inv_e = ad.expand(ad.reshape(inv, (b, k, 1)), prof)

        def profile(c):
            d = ad.sub(ad.expand(ad.reshape(c, (b, k, 1)), prof), np.broadcast_to(self._axis, prof))
            return ad.exp(ad.scale(ad.mul(ad.square(d), inv_e), -1.0))

        gx = profile(cx)
        gy = profile(cy)
        colors = ad.reshape(ad.matmul(y, self._pal2d), (b, k, 3))
        wc = ad.mul(colors, ad.expand(ad.reshape(w, (b, k, 1)), (b, k, 3)))
        rows = ad.mul(
            ad.expand(ad.reshape(gy, (b, k, 1, s)), (b, k, 3, s)),
            ad.expand(ad.reshape(wc, (b, k, 3, 1)), (b, k, 3, s)),
        )
        rows = ad.transpose(ad.reshape(rows, (b, k, 3 * s)), (0, 2, 1))
        field_ = ad.reshape(ad.matmul(rows, gx), (b, 3, s, s))
        field_ = ad.transpose(field_, (0, 2, 3, 1))
        img = ad.sigmoid(ad.sub(field_, np.full((b, s, s, 3), cfg.bias)))
        return img

    def generate(self, z, y) -> np.ndarray:
        """Plain-array convenience wrapper."""
        return self(np.asarray(z, dtype=np.float64), np.asarray(y, dtype=np.float64)).data


def toy_generate(z, y, config: ToyGeneratorConfig | None = None) -> np.ndarray:
    return ToyGenerator(config).generate(z, y)
