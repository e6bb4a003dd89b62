"""Gradient-fidelity checks against central finite differences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .directions.losses import Batch, loss_latent, loss_joint
from .directions.models import DirectionModel
from .toy.assessors import SmoothColorfulness
from .toy.generator import ToyGenerator, ToyGeneratorConfig

PRIMITIVE_TOL = 1e-6
STACK_TOL = 1e-5


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


def _unary_ops(rng):
    """(name, fn) pairs on a (3, 4) tensor; all smooth, none near a kink."""
    W = rng.standard_normal((4, 4)) * 0.5
    c = rng.standard_normal((3, 4))
    return [
        ("tanh", ad.tanh),
        ("sigmoid", ad.sigmoid),
        ("square", lambda t: ad.scale(ad.square(t), 0.5)),
        ("exp", lambda t: ad.exp(ad.tanh(t))),
        ("mul", lambda t: ad.mul(t, c)),
        ("matmul", lambda t: ad.matmul(t, W)),
        ("add", lambda t: ad.add(t, c)),
        ("sub", lambda t: ad.sub(c, t)),
        ("scale", lambda t: ad.scale(t, 1.7)),
        ("selfmul", lambda t: ad.mul(t, ad.tanh(t))),
        ("sqrt", lambda t: ad.sqrt(ad.add(ad.square(t), np.ones(t.shape)))),
        ("log", lambda t: ad.log(ad.sigmoid(t))),
        ("concat-slice", lambda t: ad.slice_(ad.concat([t, ad.tanh(t)], axis=1), 1, 2, 6)),
        ("transpose", lambda t: ad.reshape(ad.transpose(ad.reshape(t, (4, 3))), (3, 4))),
        ("mean-expand", lambda t: ad.expand(ad.mean(t, axis=0), (3, 4))),
        ("sum-expand", lambda t: ad.expand(ad.reshape(ad.sum_(t, axis=1), (3, 1)), (3, 4))),
        ("relu-shifted", lambda t: ad.relu(ad.add(ad.square(t), np.full(t.shape, 0.1)))),
        ("clamp-inner", lambda t: ad.clamp(ad.tanh(t), -2.0, 2.0)),
        ("bmm", lambda t: ad.reshape(ad.matmul(ad.reshape(t, (3, 1, 4)), np.broadcast_to(W, (3, 4, 4))), (3, 4))),
    ]


def primitive_composition(seed: int, depth: int = 6):
    """A random chain of primitives ending in a mean; returns (f, x0, names)."""
    rng = np.random.default_rng(seed)
    ops = _unary_ops(rng)
    picks = rng.integers(0, len(ops), depth)
    chain = [ops[i] for i in picks]

    def f(x):
        for _, op in chain:
            x = op(x)
        return ad.mean(x)

    return f, rng.standard_normal((3, 4)), [n for n, _ in chain]


def toy_stack(d_z: int, kind: str, seed: int = 0, batch: int = 4, side: int = 16, hidden: int = 8):
    """Small generator/assessor/model/batch for differentiating the steering loss."""
    rng = np.random.default_rng(seed)
    n_classes = 4
    G = ToyGenerator(ToyGeneratorConfig(side=side, n_blobs=max(1, d_z // 4), n_classes=n_classes))
    A = SmoothColorfulness()
    model = DirectionModel.build(kind, d_z, n_classes, hidden, rng=rng, output_init="normal")
    b = Batch(
        rng.standard_normal((batch, d_z)),
        np.eye(n_classes)[rng.integers(0, n_classes, batch)],
        rng.uniform(-0.5, 0.5, batch),
        rng.standard_normal((batch, model.z_noise_dim)) if model.z_noise_dim else None,
        rng.standard_normal((batch, model.y_noise_dim)) if model.y_noise_dim else None,
    )
    return G, A, model, b


def stack_error(d_z: int, kind: str, seed: int = 0, step: float = 1e-6) -> float:
    G, A, model, b = toy_stack(d_z, kind, seed)
    if kind == "noise+class":
        def f(ps):
            return loss_joint(b, G, A, model.z_part, model.y_part, params=ps)
    else:
        def f(ps):
            return loss_latent(b, G, A, model, params=ps)
    return ad.gradient_check(f, model.params(), step)


def gradcheck_suite(n_compositions: int = 20, dims=(4, 8, 16), step: float = 1e-6) -> list[CheckResult]:
    out = []
    for s in range(n_compositions):
        f, x, names = primitive_composition(s)
        out.append(CheckResult(f"composition[{s}]:" + ">".join(names), ad.gradient_check(f, x, step), PRIMITIVE_TOL))
    for d in dims:
        out.append(CheckResult(f"latent-noise[d_z={d}]", stack_error(d, "noise", step=step), STACK_TOL))
        out.append(CheckResult(f"latent-fixed[d_z={d}]", stack_error(d, "fixed", step=step), STACK_TOL))
        out.append(CheckResult(f"joint[d_z={d}]", stack_error(d, "noise+class", step=step), STACK_TOL))
    return out
