"""Synthetic proxy-labelled dataset and the small creativity classifier.

Labels follow the ancestor-count rule: more than 100 ancestors is creative,
zero ancestors is non-creative, anything between is left unlabelled.
The synthetic set mirrors the 2:1:1 mix of bred images, zero-ancestor images
and raw generator samples. The synthesis knobs below are fixed constants for
the toy world and say nothing about what real creativity looks like.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..metrics import SEVEN, all_metrics
from ..optim import OptimState, radam_step
from .assessors import Assessor
from .generator import ToyGenerator, ToyGeneratorConfig

CREATIVE = "creative"
NON_CREATIVE = "non-creative"
UNLABELED = "unlabeled"
CREATIVE_THRESHOLD = 100

LATENT_DIM = 32
N_CLASSES = 8
N_USERS = 12

# creative: many blobs, wide saturated palettes; zero-ancestor: two muted blobs
CREATIVE_BLOBS = 8
CREATIVE_RADIUS = 0.25
CREATIVE_GAIN = 5.0
ZERO_ANCESTOR_BLOBS = 2
ZERO_ANCESTOR_SATURATION = (0.1, 0.35)

SEGMENT = {"threshold": 0.25, "mode": "contrast"}


def proxy_label(ancestor_count: int) -> str:
    if ancestor_count < 0:
        raise ValueError("ancestor_count must be non-negative")
    if ancestor_count > CREATIVE_THRESHOLD:
        return CREATIVE
    if ancestor_count == 0:
        return NON_CREATIVE
    return UNLABELED


@dataclass
class ProxyExample:
    image: np.ndarray
    ancestor_count: int
    label: str
    source: str
    user_id: str = ""
    latent: np.ndarray | None = field(default=None, repr=False)

    @property
    def target(self) -> float:
        return 1.0 if self.label == CREATIVE else 0.0


def _palette(rng, n_classes, n_blobs, sat_range) -> np.ndarray:
    pal = np.empty((n_classes, n_blobs, 3))
    for c in range(n_classes):
        for k in range(n_blobs):
            pal[c, k] = colorsys.hsv_to_rgb(rng.uniform(), rng.uniform(*sat_range), 1.0)
    return pal


def synth_proxy_dataset(n: int, seed: int = 0, side: int = 64) -> list[ProxyExample]:
    if n < 8:
        raise ValueError("need at least 8 examples")
    rng = np.random.default_rng(seed)
    n_creative = n // 2
    n_zero = n // 4
    n_raw = n - n_creative - n_zero

    gens = {
        "creative": ToyGenerator(ToyGeneratorConfig(
            side=side, n_blobs=CREATIVE_BLOBS, n_classes=N_CLASSES, base_radius=CREATIVE_RADIUS, gain=CREATIVE_GAIN,
            palette=_palette(rng, N_CLASSES, CREATIVE_BLOBS, (0.8, 1.0)))),
        "zero_ancestor": ToyGenerator(ToyGeneratorConfig(
            side=side, n_blobs=ZERO_ANCESTOR_BLOBS, n_classes=N_CLASSES,
            palette=_palette(rng, N_CLASSES, ZERO_ANCESTOR_BLOBS, ZERO_ANCESTOR_SATURATION))),
        "raw_generator": ToyGenerator(ToyGeneratorConfig(side=side, n_classes=N_CLASSES)),
    }
    out: list[ProxyExample] = []
    for source, count in (("creative", n_creative), ("zero_ancestor", n_zero), ("raw_generator", n_raw)):
        z = rng.standard_normal((count, LATENT_DIM))
        cls = rng.integers(0, N_CLASSES, count)
        y = np.eye(N_CLASSES)[cls]
        if source == "creative":
            # bred images blend two parents' classes
            other = np.eye(N_CLASSES)[rng.integers(0, N_CLASSES, count)]
            mix = rng.uniform(0.3, 0.7, (count, 1))
            y = mix * y + (1 - mix) * other
            ancestors = rng.integers(CREATIVE_THRESHOLD + 1, 1000, count)
        else:
            ancestors = np.zeros(count, dtype=np.int64)
        users = rng.integers(0, N_USERS, count)
        imgs = gens[source].generate(z, y)
        for i in range(count):
            a = int(ancestors[i])
            out.append(ProxyExample(imgs[i], a, proxy_label(a), source, f"user{users[i]:02d}", z[i]))
    return out


def shuffle_labels(dataset: list[ProxyExample], seed: int = 0) -> list[ProxyExample]:
    """Copy of ``dataset`` with labels randomly permuted (chance-level control)."""
    rng = np.random.default_rng(seed)
    labels = [ex.label for ex in dataset]
    perm = rng.permutation(len(labels))
    return [
        ProxyExample(ex.image, ex.ancestor_count, labels[j], ex.source, ex.user_id, ex.latent)
        for ex, j in zip(dataset, perm)
    ]


# imputation for mask metrics on empty masks
_MISSING_FILL = {"centeredness": 1.0, "squareness": 0.0}


def metric_features(images) -> np.ndarray:
    rows = []
    for img in images:
        m = all_metrics(img, **SEGMENT)
        rows.append([
            _MISSING_FILL.get(k, 0.0) if not np.isfinite(m[k]) else m[k] for k in SEVEN
        ])
    return np.asarray(rows, dtype=np.float64)


def pixel_features(images, side: int = 8) -> np.ndarray:
    """Block-averaged pixels on a side x side grid (raw-pixel mode)."""
    out = []
    for img in images:
        h, w, _ = img.shape
        ys = np.linspace(0, h, side + 1).astype(int)
        xs = np.linspace(0, w, side + 1).astype(int)
        cells = [img[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean(axis=(0, 1)) for i in range(side) for j in range(side)]
        out.append(np.concatenate(cells))
    return np.asarray(out)


@dataclass
class AccuracyReport:
    train_accuracy: float
    val_accuracy: float
    n_train: int
    n_val: int
    losses: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


class ProxyClassifier(Assessor):
    """Two-layer MLP over image features; scores are P(creative)."""

    name = "proxy_classifier"
    differentiable = False

    def __init__(self, params, mu, sd, features: str = "metrics"):
        self.params = [np.asarray(p, dtype=np.float64) for p in params]
        self.mu = np.asarray(mu, dtype=np.float64)
        self.sd = np.asarray(sd, dtype=np.float64)
        self.features = features

    def featurize(self, images) -> np.ndarray:
        f = metric_features(images) if self.features == "metrics" else pixel_features(images)
        return (f - self.mu) / self.sd

    def logits(self, x, params=None):
        W1, b1, W2, b2 = params if params is not None else self.params
        x = ad._as_tensor(x)
        n = x.shape[0]
        h = ad.tanh(ad.add(ad.matmul(x, W1), ad.expand(ad.reshape(b1, (1, -1)), (n, W1.shape[1]))))
        return ad.reshape(ad.add(ad.matmul(h, W2), ad.expand(ad.reshape(b2, (1, 1)), (n, 1))), (n,))

    def score(self, images) -> np.ndarray:
        return ad.sigmoid(self.logits(self.featurize(images))).data

    def save(self, path):
        np.savez(path, W1=self.params[0], b1=self.params[1], W2=self.params[2], b2=self.params[3],
                 mu=self.mu, sd=self.sd, features=np.array(self.features))

    @classmethod
    def load(cls, path) -> "ProxyClassifier":
        d = np.load(path)
        return cls([d["W1"], d["b1"], d["W2"], d["b2"]], d["mu"], d["sd"], str(d["features"]))


def _bce(logit: ad.Tensor, target: np.ndarray) -> ad.Tensor:
    p = ad.clamp(ad.sigmoid(logit), 1e-12, 1.0 - 1e-12)
    pos = ad.mul(ad.log(p), target)
    neg = ad.mul(ad.log(ad.sub(np.ones(p.shape), p)), 1.0 - target)
    return ad.scale(ad.mean(ad.add(pos, neg)), -1.0)


def train_assessor_classifier(dataset: list[ProxyExample], split_seed: int = 0, *,
                              features: str = "metrics", hidden: int = 16,
                              iterations: int = 1500, lr: float = 1e-2,
                              seed: int = 0, val_fraction: float = 0.2):
    """Fit the classifier on an 80/20 random split.

    Unlabelled examples are dropped. Returns ``(classifier, AccuracyReport)``.
    """
    data = [ex for ex in dataset if ex.label in (CREATIVE, NON_CREATIVE)]
    y = np.array([ex.target for ex in data])
    if y.size == 0 or y.min() == y.max():
        raise ValueError("classifier training needs both creative and non-creative examples")
    if features == "metrics":
        X = metric_features([ex.image for ex in data])
    elif features == "pixels":
        X = pixel_features([ex.image for ex in data])
    else:
        raise ValueError(f"unknown feature mode {features!r}")

    perm = np.random.default_rng(split_seed).permutation(len(data))
    n_val = int(round(val_fraction * len(data)))
    val, tr = perm[:n_val], perm[n_val:]
    mu = X[tr].mean(axis=0)
    sd = X[tr].std(axis=0)
    sd[sd == 0] = 1.0
    Xs = (X - mu) / sd

    rng = np.random.default_rng(seed)
    d = X.shape[1]
    params = [
        rng.standard_normal((d, hidden)) / np.sqrt(d),
        np.zeros(hidden),
        rng.standard_normal((hidden, 1)) / np.sqrt(hidden),
        np.zeros(1),
    ]
    clf = ProxyClassifier(params, mu, sd, features)
    state = OptimState(lr=lr)
    losses = np.empty(iterations)
    for it in range(iterations):
        tape = ad.Tape()
        ps = [tape.watch(p) for p in params]
        loss = _bce(clf.logits(Xs[tr], ps), y[tr])
        params, state = radam_step(params, tape.gradients(loss, ps), state)
        losses[it] = loss.item()
    clf.params = params

    def acc(idx):
        if idx.size == 0:
            return float("nan")
        pred = clf.logits(Xs[idx]).data > 0
        return float((pred == (y[idx] > 0.5)).mean())

    return clf, AccuracyReport(acc(tr), acc(val), int(tr.size), int(val.size), losses)
