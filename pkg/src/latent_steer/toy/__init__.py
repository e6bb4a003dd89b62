from .assessors import (
    ASSESSORS,
    Assessor,
    Brightness,
    SmoothColorfulness,
    assessor_brightness,
    assessor_smooth_colorfulness,
    make_assessor,
)
from .generator import ToyGenerator, ToyGeneratorConfig, default_palette, toy_generate
from .proxy import (
    CREATIVE,
    NON_CREATIVE,
    UNLABELED,
    AccuracyReport,
    ProxyClassifier,
    ProxyExample,
    proxy_label,
    shuffle_labels,
    synth_proxy_dataset,
    train_assessor_classifier,
)

__all__ = [
    "ASSESSORS", "Assessor", "Brightness", "SmoothColorfulness", "assessor_brightness",
    "assessor_smooth_colorfulness", "make_assessor", "ToyGenerator", "ToyGeneratorConfig",
    "default_palette", "toy_generate", "CREATIVE", "NON_CREATIVE", "UNLABELED",
    "AccuracyReport", "ProxyClassifier", "ProxyExample", "proxy_label", "shuffle_labels",
    "synth_proxy_dataset", "train_assessor_classifier",
]
