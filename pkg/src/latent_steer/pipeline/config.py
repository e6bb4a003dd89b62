"""Run configuration: JSON files in, a frozen JSON sidecar out.

Every field has a default, so ``{}`` is a valid config. The top-level
``seed`` drives every random stream of a run; the resolved config (all
defaults filled in) is what gets written next to the artifacts.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..directions.sweep import DEFAULT_GRID
from ..directions.train import TrainConfig
from ..explore.tsne import EmbeddingConfig
from ..toy.generator import ToyGeneratorConfig

MODES = ("train", "sweep", "metrics", "embed", "assessor", "synth", "gradcheck", "compare")
LONG_RUN_ITERATIONS = 400_000


class ConfigError(ValueError):
    pass


@dataclass
class AssessorSection:
    name: str = "smooth_colorfulness"
    params: dict = field(default_factory=dict)


@dataclass
class SweepSection:
    model: str | None = None          # path, or "zero" for an untrained identity model
    n_latents: int = 1000
    alphas: list = field(default_factory=lambda: list(DEFAULT_GRID))
    metrics: bool = True
    n_samples: int = 0                # images saved per alpha
    chunk: int = 250
    segment: dict = field(default_factory=lambda: {"threshold": 0.25, "mode": "contrast"})


@dataclass
class MetricsSection:
    manifest: str | None = None
    threshold: float = 0.5
    mode: str = "luminance"


@dataclass
class EmbedSection:
    source: str = "synth"             # synth | manifest | csv
    path: str | None = None
    n: int = 1000
    d: int = 64
    n_users: int = 12
    user_spread: float = 1.5
    min_count: int | None = 50
    max_count: int | None = 100
    tsne: dict = field(default_factory=dict)


@dataclass
class ClassifierSection:
    manifest: str | None = None       # None -> synthetic proxy dataset
    n: int = 400
    features: str = "metrics"
    hidden: int = 16
    iterations: int = 1500
    lr: float = 1e-2
    val_fraction: float = 0.2


@dataclass
class SynthSection:
    n: int = 400
    side: int = 64


@dataclass
class GradcheckSection:
    compositions: int = 20
    dims: list = field(default_factory=lambda: [4, 8, 16])
    step: float = 1e-6


@dataclass
class CompareSection:
    run_a: str | None = None
    run_b: str | None = None
    label_a: str = "a"
    label_b: str = "b"


_SECTIONS = {
    "assessor": AssessorSection,
    "sweep": SweepSection,
    "metrics": MetricsSection,
    "embed": EmbedSection,
    "classifier": ClassifierSection,
    "synth": SynthSection,
    "gradcheck": GradcheckSection,
    "compare": CompareSection,
}


@dataclass
class RunConfig:
    mode: str = "train"
    seed: int = 0
    out: str = "runs/default"
    generator: ToyGeneratorConfig = field(default_factory=ToyGeneratorConfig)
    assessor: AssessorSection = field(default_factory=AssessorSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepSection = field(default_factory=SweepSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    embed: EmbedSection = field(default_factory=EmbedSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    synth: SynthSection = field(default_factory=SynthSection)
    gradcheck: GradcheckSection = field(default_factory=GradcheckSection)
    compare: CompareSection = field(default_factory=CompareSection)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        # the run seed and generator shape override the training section
        self.train.seed = self.seed
        self.train.n_classes = self.generator.n_classes
        if self.train.d_z < self.generator.min_latent_dim:
            raise ConfigError(
                f"train.d_z={self.train.d_z} is below the generator's latent size {self.generator.min_latent_dim}"
            )
        grid = [float(a) for a in self.sweep.alphas]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep.alphas must be non-empty and strictly ascending")
        self.sweep.alphas = grid

    @property
    def tsne(self) -> EmbeddingConfig:
        return _build(EmbeddingConfig, {**self.embed.tsne, "seed": self.seed}, "embed.tsne")

    def to_dict(self) -> dict:
        # ``out`` is left out so that a run directory is relocatable and reruns
        # elsewhere are byte-identical
        d = {"mode": self.mode, "seed": self.seed,
             "generator": self.generator.to_dict(), "train": self.train.to_dict()}
        for name in _SECTIONS:
            d[name] = dataclasses.asdict(getattr(self, name))
        d["embed"]["tsne"] = self.tsne.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _build(cls, data, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict, **overrides) -> RunConfig:
    """Build a RunConfig; ``overrides`` (mode/seed/out) win over the file when not None."""
    data = dict(data or {})
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    top = {k: data.pop(k) for k in ("mode", "seed", "out") if k in data}
    sections = {}
    if "generator" in data:
        g = data.pop("generator")
        sections["generator"] = _build(ToyGeneratorConfig, g, "generator")
    if "train" in data:
        sections["train"] = _build(TrainConfig, data.pop("train"), "train")
    for name, cls in _SECTIONS.items():
        if name in data:
            sections[name] = _build(cls, data.pop(name), name)
    if data:
        raise ConfigError(f"unknown top-level key(s) {', '.join(sorted(data))}")
    if "seed" in top and (isinstance(top["seed"], bool) or not isinstance(top["seed"], int)):
        raise ConfigError("seed must be an integer")
    try:
        return RunConfig(**top, **sections)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, **overrides) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data, **overrides)
