"""Rectified Adam and heavy-ball SGD over lists of float64 arrays.

Both step functions are pure in the parameters (new arrays are returned) and
advance the supplied state in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import NonFiniteError

RHO_THRESHOLD = 4.0


@dataclass
class OptimState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def init_for(self, params):
        if not self.m:
            self.m = [np.zeros_like(p, dtype=np.float64) for p in params]
            self.v = [np.zeros_like(p, dtype=np.float64) for p in params]
        return self


def rho(t: int, beta2: float) -> tuple[float, float]:
    """Return (rho_inf, rho_t), the SMA length bound and its value at step t."""
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    bt = beta2 ** t
    return rho_inf, rho_inf - 2.0 * t * bt / (1.0 - bt)


def rectifier(t: int, beta2: float) -> float | None:
    """Variance rectification term r_t, or None when the adaptive step is skipped."""
    rho_inf, rho_t = rho(t, beta2)
    if rho_t <= RHO_THRESHOLD:
        return None
    return math.sqrt(
        ((rho_t - 4.0) * (rho_t - 2.0) * rho_inf)
        / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)
    )


def radam_step(params, grads, state: OptimState):
    state.init_for(params)
    if len(grads) != len(params):
        raise ValueError("params and grads differ in length")
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    r = rectifier(t, b2)
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != np.shape(p):
            raise ValueError(f"gradient shape {g.shape} != parameter shape {np.shape(p)}")
        m = b1 * state.m[i] + (1.0 - b1) * g
        v = b2 * state.v[i] + (1.0 - b2) * g * g
        state.m[i], state.v[i] = m, v
        m_hat = m / (1.0 - b1 ** t)
        if r is None:
            new = p - state.lr * m_hat
        else:
            v_hat = np.sqrt(v / (1.0 - b2 ** t))
            new = p - state.lr * r * m_hat / (v_hat + state.eps)
        if not np.all(np.isfinite(new)):
            raise NonFiniteError(f"non-finite RAdam update at step {t}")
        out.append(new)
    return out, state


@dataclass
class MomentumState:
    lr: float = 1e-3
    momentum: float = 0.9
    t: int = 0
    velocity: list[np.ndarray] = field(default_factory=list)


def sgd_momentum_step(params, grads, state: MomentumState):
    # v <- mu v + g ; p <- p - lr v
    if not state.velocity:
        state.velocity = [np.zeros_like(p, dtype=np.float64) for p in params]
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        vel = state.momentum * state.velocity[i] + np.asarray(g, dtype=np.float64)
        state.velocity[i] = vel
        new = p - state.lr * vel
        if not np.all(np.isfinite(new)):
            raise NonFiniteError(f"non-finite SGD update at step {state.t}")
        out.append(new)
    return out, state


def make_optimizer(name: str, lr: float = 1e-3, **kw):
    """Return ``(step_fn, state)`` for ``"radam"`` or ``"sgd"``."""
    name = name.lower()
    if name == "radam":
        return radam_step, OptimState(lr=lr, **kw)
    if name in ("sgd", "sgd_momentum"):
        return sgd_momentum_step, MomentumState(lr=lr, **kw)
    raise ValueError(f"unknown optimizer {name!r}")
