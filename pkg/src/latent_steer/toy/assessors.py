"""Image scorers used as the assessor ``A`` in direction training and sweeps.

An assessor maps a batch of images (B, H, W, 3) to scores (B,). Differentiable
assessors also expose :meth:`score_tensor`, operating on autodiff tensors.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad

# rg = R - G, yb = (R + G)/2 - B as a 3x2 linear map
_OPPONENT = np.array([[1.0, 0.5], [-1.0, 0.5], [0.0, -1.0]])
_LUMA = np.array([[0.299], [0.587], [0.114]])


class Assessor:
    name = "assessor"
    differentiable = False

    def __call__(self, images) -> np.ndarray:
        imgs = np.asarray(images, dtype=np.float64)
        if imgs.ndim == 3:
            return self(imgs[None])[0]
        return self.score(imgs)

    def score(self, images: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_tensor(self, images: ad.Tensor) -> ad.Tensor:
        raise TypeError(f"assessor {self.name!r} is not differentiable")


def _flat(images: ad.Tensor) -> tuple[ad.Tensor, int, int]:
    b, h, w, c = images.shape
    return ad.reshape(images, (b, h * w, c)), b, h * w


def _bmat(m: np.ndarray, b: int) -> np.ndarray:
    return np.broadcast_to(m, (b,) + m.shape)


class SmoothColorfulness(Assessor):
    """sigmoid(gain * (C - offset)) with C a smoothed colorfulness on the 0-1 scale.

    The square roots of the metric are replaced by ``sqrt(x + eps) - sqrt(eps)``,
    which keeps the gradient finite at zero and maps zero to zero. A uniform
    grey image therefore scores ``sigmoid(-gain * offset)``.
    """

    name = "smooth_colorfulness"
    differentiable = True

    def __init__(self, gain: float = 10.0, offset: float = 0.3, eps: float = 1e-6):
        self.gain = gain
        self.offset = offset
        self.eps = eps

    @property
    def gray_score(self) -> float:
        return float(1.0 / (1.0 + np.exp(self.gain * self.offset)))

    def _ssqrt(self, x):
        return ad.sub(ad.sqrt(ad.add(x, np.full(x.shape, self.eps))), np.full(x.shape, np.sqrt(self.eps)))

    def raw_tensor(self, images: ad.Tensor) -> ad.Tensor:
        flat, b, n = _flat(images)
        opp = ad.matmul(flat, _bmat(_OPPONENT, b))         # (b, n, 2)
        mu = ad.mean(opp, axis=1)                           # (b, 2)
        msq = ad.mean(ad.square(opp), axis=1)
        var = ad.sub(msq, ad.square(mu))
        spread = self._ssqrt(ad.sum_(var, axis=1))
        centre = self._ssqrt(ad.sum_(ad.square(mu), axis=1))
        return ad.add(spread, ad.scale(centre, 0.3))

    def score_tensor(self, images: ad.Tensor) -> ad.Tensor:
        raw = self.raw_tensor(images)
        return ad.sigmoid(ad.scale(ad.sub(raw, np.full(raw.shape, self.offset)), self.gain))

    def score(self, images: np.ndarray) -> np.ndarray:
        return self.score_tensor(ad.Tensor(images)).data


class Brightness(Assessor):
    """Mean BT.601 luminance; already in [0, 1]."""

    name = "brightness"
    differentiable = True

    def score_tensor(self, images: ad.Tensor) -> ad.Tensor:
        flat, b, n = _flat(images)
        return ad.reshape(ad.mean(ad.matmul(flat, _bmat(_LUMA, b)), axis=1), (b,))

    def score(self, images: np.ndarray) -> np.ndarray:
        return self.score_tensor(ad.Tensor(images)).data


def assessor_smooth_colorfulness(image, **kw) -> float | np.ndarray:
    return SmoothColorfulness(**kw)(image)


def assessor_brightness(image) -> float | np.ndarray:
    return Brightness()(image)


ASSESSORS = {
    SmoothColorfulness.name: SmoothColorfulness,
    Brightness.name: Brightness,
}


def make_assessor(name: str, **kw) -> Assessor:
    try:
        return ASSESSORS[name](**kw)
    except KeyError:
        raise ValueError(f"unknown assessor {name!r}; choose from {sorted(ASSESSORS)}") from None
