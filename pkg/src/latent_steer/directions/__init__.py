from .losses import Batch, loss_latent, loss_joint, per_sample_gap, steering_loss, target_score
from .models import (
    KINDS,
    ClassDirectionNet,
    DirectionModel,
    DirectionNet,
    FixedDirection,
    NoiseDirectionNet,
    transform_class,
    transform_fixed,
    transform_noise,
)
from .persist import ModelFormatError, load_model, save_model
from .sweep import DEFAULT_GRID, SweepReport, alpha_sweep
from .train import TrainConfig, TrainingDiverged, TrainResult, build_model, smoothed, train_direction

__all__ = [
    "Batch", "loss_latent", "loss_joint", "per_sample_gap", "steering_loss", "target_score",
    "KINDS", "ClassDirectionNet", "DirectionModel", "DirectionNet", "FixedDirection",
    "NoiseDirectionNet", "transform_class", "transform_fixed", "transform_noise",
    "ModelFormatError", "load_model", "save_model", "DEFAULT_GRID", "SweepReport",
    "alpha_sweep", "TrainConfig", "TrainingDiverged", "TrainResult", "build_model",
    "smoothed", "train_direction",
]
