"""Training loop for direction models."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import autodiff as ad
from ..optim import make_optimizer
from .losses import Batch, steering_loss
from .models import KINDS, DirectionModel

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    kind: str = "noise"
    iterations: int = 5000
    batch_size: int = 8
    optimizer: str = "radam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.9
    alpha_low: float = -0.5
    alpha_high: float = 0.5
    d_z: int = 16
    n_classes: int = 8
    hidden: int = 256
    noise_dim: int | None = None
    output_init: str = "zeros"
    normalize_theta: bool = True
    clamp_targets: bool = False
    truncation: float | None = None
    seed: int = 0
    log_every: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("iterations and batch_size must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class TrainingDiverged(RuntimeError):
    """Raised when the loss or an update goes non-finite.

    ``checkpoint`` holds the last finite parameters and ``losses`` the trace
    up to the failure.
    """

    def __init__(self, msg, iteration, checkpoint, losses):
        super().__init__(msg)
        self.iteration = iteration
        self.checkpoint = checkpoint
        self.losses = losses


@dataclass
class TrainResult:
    model: DirectionModel
    losses: np.ndarray
    config: TrainConfig
    meta: dict = field(default_factory=dict)


def sample_batch(rng: np.random.Generator, noise_rng: np.random.Generator,
                 model: DirectionModel, cfg: TrainConfig, n: int | None = None) -> Batch:
    n = cfg.batch_size if n is None else n
    z = rng.standard_normal((n, cfg.d_z))
    if cfg.truncation is not None:
        z = np.clip(z, -cfg.truncation, cfg.truncation)
    y = np.eye(cfg.n_classes)[rng.integers(0, cfg.n_classes, n)]
    alpha = rng.uniform(cfg.alpha_low, cfg.alpha_high, n)
    # noise is always drawn so that z/y/alpha streams match across model kinds
    eps_z = noise_rng.standard_normal((n, max(model.z_noise_dim, 1)))[:, : model.z_noise_dim]
    eps_y = noise_rng.standard_normal((n, max(model.y_noise_dim, 1)))[:, : model.y_noise_dim]
    return Batch(z, y, alpha, eps_z if model.z_noise_dim else None, eps_y if model.y_noise_dim else None)


def seed_streams(seed: int):
    """Independent generators for (init, data, noise)."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


def build_model(cfg: TrainConfig, rng: np.random.Generator | None = None) -> DirectionModel:
    if rng is None:
        rng = seed_streams(cfg.seed)[0]
    return DirectionModel.build(
        cfg.kind, cfg.d_z, cfg.n_classes, cfg.hidden, cfg.noise_dim, rng,
        normalize=cfg.normalize_theta, output_init=cfg.output_init,
    )


def train_direction(cfg: TrainConfig, G, A, model: DirectionModel | None = None) -> TrainResult:
    if not A.differentiable:
        raise TypeError("training requires a differentiable assessor")
    init_rng, data_rng, noise_rng = seed_streams(cfg.seed)
    if model is None:
        model = build_model(cfg, init_rng)
    extra = {"beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.eps} if cfg.optimizer == "radam" \
        else {"momentum": cfg.momentum}
    step, state = make_optimizer(cfg.optimizer, cfg.lr, **extra)
    losses = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        batch = sample_batch(data_rng, noise_rng, model, cfg)
        before = [p.copy() for p in model.params()]
        try:
            tape = ad.Tape()
            params = [tape.watch(p) for p in before]
            loss = steering_loss(batch, G, A, model, params, cfg.clamp_targets)
            grads = tape.gradients(loss, params)
            new, state = step(before, grads, state)
            model.set_params(new)
            model.after_step()
        except FloatingPointError as exc:
            model.set_params(before)
            raise TrainingDiverged(
                f"training diverged at iteration {it}: {exc}", it, before, losses[:it].copy()
            ) from exc
        losses[it] = loss.item()
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            log.info("iter %d loss %.6f", it + 1, losses[max(0, it - cfg.log_every + 1): it + 1].mean())
    return TrainResult(model, losses, cfg)


def smoothed(losses, window: int = 250) -> np.ndarray:
    """Trailing moving average; the first ``window - 1`` entries average what exists."""
    x = np.asarray(losses, dtype=np.float64)
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(0, idx - window)
    return (c[idx] - c[lo]) / (idx - lo)
