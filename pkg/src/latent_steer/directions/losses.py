"""Steering losses: squared gap between the steered image's score and the
original score shifted by alpha."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from .models import DirectionModel, DirectionNet, FixedDirection


@dataclass
class Batch:
    z: np.ndarray          # (B, d_z)
    y: np.ndarray          # (B, n_classes)
    alpha: np.ndarray      # (B,)
    eps_z: np.ndarray | None = None
    eps_y: np.ndarray | None = None

    def __len__(self):
        return self.z.shape[0]


def target_score(A, G, z, y, alpha, clamp: bool = False):
    """``A(G(z, y)) + alpha``, optionally clipped to [0, 1]."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    zb = z.reshape(1, -1) if single else z
    yb = np.asarray(y, dtype=np.float64).reshape(zb.shape[0], -1)
    base = np.asarray(A(G(zb, yb).data), dtype=np.float64).reshape(-1)
    t = base + np.asarray(alpha, dtype=np.float64).reshape(-1)
    if clamp:
        t = np.clip(t, 0.0, 1.0)
    return float(t[0]) if single else t


def _score(A, images: ad.Tensor) -> ad.Tensor:
    if images.tracked:
        if not A.differentiable:
            raise TypeError(f"assessor {A.name!r} cannot be trained through")
        return A.score_tensor(images)
    return ad.Tensor(A(images.data))


def per_sample_gap(batch: Batch, G, A, model: DirectionModel, params=None,
                   clamp: bool = False) -> ad.Tensor:
    """Score of steered image minus target, per sample (B,)."""
    target = target_score(A, G, batch.z, batch.y, batch.alpha, clamp)
    z_new, y_new = model.transform(batch.z, batch.y, batch.alpha, batch.eps_z, batch.eps_y, params)
    scores = _score(A, G(z_new, y_new))
    return ad.sub(scores, target)


def steering_loss(batch: Batch, G, A, model: DirectionModel, params=None,
                  clamp: bool = False) -> ad.Tensor:
    gap = per_sample_gap(batch, G, A, model, params, clamp)
    loss = ad.mean(ad.square(gap))
    if not np.isfinite(loss.data).all():
        raise ad.NonFiniteError("non-finite steering loss")
    return loss


def _as_model(net) -> DirectionModel:
    if isinstance(net, DirectionModel):
        return net
    if isinstance(net, FixedDirection):
        return DirectionModel("fixed", net)
    return DirectionModel("noise", net)


def loss_latent(batch: Batch, G, A, net, params=None, clamp: bool = False) -> ad.Tensor:
    """Latent-only steering loss: the class vector is left untouched."""
    model = _as_model(net)
    if model.y_part is not None:
        model = DirectionModel("noise", model.z_part)
        if params is not None:
            params = params[: len(model.z_part.params())]
    return steering_loss(batch, G, A, model, params, clamp)


def loss_joint(batch: Batch, G, A, z_net: DirectionNet, y_net: DirectionNet,
              params=None, clamp: bool = False) -> ad.Tensor:
    """Joint latent + class steering loss, one shared alpha per sample."""
    return steering_loss(batch, G, A, DirectionModel("noise+class", z_net, y_net), params, clamp)
