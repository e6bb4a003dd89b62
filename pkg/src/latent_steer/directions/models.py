"""Latent-space direction models.

* :class:`FixedDirection`: a single unit vector, ``z + alpha * theta``.
* :class:`DirectionNet`: two affine layers with tanh between, fed the input
  vector concatenated with a noise draw; ``x + alpha * NN(x, eps)``. Used for
  latent codes (:class:`NoiseDirectionNet`) and class vectors
  (:class:`ClassDirectionNet`).
* :class:`DirectionModel`: what gets trained and persisted; one of
  ``fixed``, ``noise`` (latent net only) or ``noise+class`` (both nets).

Every ``transform`` is batched: inputs are (B, d) and alpha is (B,).
Parameters can be swapped for tape tensors via the ``params`` argument, which
is how the training loop differentiates through them.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad

KINDS = ("fixed", "noise", "noise+class")


def _alpha_like(alpha, shape) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if a.size == 1:
        a = np.full(shape[0], a[0])
    if a.shape != (shape[0],):
        raise ad.ShapeError(f"alpha has {a.size} entries for a batch of {shape[0]}")
    return np.broadcast_to(a[:, None], shape)


class FixedDirection:
    def __init__(self, theta, normalize: bool = True):
        self.theta = np.array(theta, dtype=np.float64).reshape(-1)
        self.normalize = normalize
        if normalize:
            self.renormalize()

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, normalize: bool = True):
        return cls(rng.standard_normal(dim), normalize)

    @property
    def dim(self) -> int:
        return self.theta.size

    def params(self) -> list[np.ndarray]:
        return [self.theta]

    def set_params(self, params):
        (self.theta,) = [np.array(p, dtype=np.float64) for p in params]
        if self.normalize:
            self.renormalize()

    def renormalize(self):
        n = np.linalg.norm(self.theta)
        if n == 0:
            raise ValueError("direction collapsed to zero")
        self.theta = self.theta / n

    def shift(self, x, eps=None, params=None) -> ad.Tensor:
        theta = params[0] if params is not None else self.theta
        b = ad._as_tensor(x).shape[0]
        return ad.expand(ad.reshape(theta, (1, self.dim)), (b, self.dim))

    def transform(self, x, alpha, eps=None, params=None) -> ad.Tensor:
        x = ad._as_tensor(x)
        step = ad.mul(self.shift(x, eps, params), _alpha_like(alpha, x.shape))
        return ad.add(x, step)


class DirectionNet:
    """``x + alpha * (W2 tanh(W1 [x, eps] + b1) + b2)``."""

    def __init__(self, d_in: int, d_eps: int | None = None, hidden: int = 256,
                 rng: np.random.Generator | None = None, output_init: str = "zeros"):
        self.d_in = int(d_in)
        self.d_eps = int(d_in if d_eps is None else d_eps)
        self.hidden = int(hidden)
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = self.d_in + self.d_eps
        self.W1 = rng.standard_normal((fan_in, self.hidden)) / np.sqrt(fan_in)
        self.b1 = np.zeros(self.hidden)
        if output_init == "zeros":
            self.W2 = np.zeros((self.hidden, self.d_in))
        elif output_init == "normal":
            self.W2 = rng.standard_normal((self.hidden, self.d_in)) / np.sqrt(self.hidden)
        else:
            raise ValueError(f"unknown output_init {output_init!r}")
        self.b2 = np.zeros(self.d_in)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.d_in, self.d_eps, self.hidden

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def set_params(self, params):
        W1, b1, W2, b2 = [np.array(p, dtype=np.float64) for p in params]
        if W1.shape != self.W1.shape or W2.shape != self.W2.shape:
            raise ValueError("parameter shapes do not match the network")
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2

    def zero_output(self):
        self.W2 = np.zeros_like(self.W2)
        self.b2 = np.zeros_like(self.b2)

    def shift(self, x, eps, params=None) -> ad.Tensor:
        W1, b1, W2, b2 = params if params is not None else self.params()
        x = ad._as_tensor(x)
        b = x.shape[0]
        eps = ad._as_tensor(eps)
        if eps.shape != (b, self.d_eps):
            raise ad.ShapeError(f"noise shape {eps.shape} != {(b, self.d_eps)}")
        inp = ad.concat([x, eps], axis=1)
        h = ad.tanh(ad.add(ad.matmul(inp, W1), ad.expand(ad.reshape(b1, (1, self.hidden)), (b, self.hidden))))
        return ad.add(ad.matmul(h, W2), ad.expand(ad.reshape(b2, (1, self.d_in)), (b, self.d_in)))

    def transform(self, x, alpha, eps, params=None) -> ad.Tensor:
        x = ad._as_tensor(x)
        step = ad.mul(self.shift(x, eps, params), _alpha_like(alpha, x.shape))
        return ad.add(x, step)


class NoiseDirectionNet(DirectionNet):
    pass


class ClassDirectionNet(DirectionNet):
    pass


class DirectionModel:
    def __init__(self, kind: str, z_part, y_part: DirectionNet | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        if (kind == "noise+class") != (y_part is not None):
            raise ValueError("a class network is required exactly for kind 'noise+class'")
        self.kind = kind
        self.z_part = z_part
        self.y_part = y_part

    @classmethod
    def build(cls, kind: str, d_z: int, n_classes: int, hidden: int = 256,
              noise_dim: int | None = None, rng: np.random.Generator | None = None,
              normalize: bool = True, output_init: str = "zeros") -> "DirectionModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        if kind == "fixed":
            return cls(kind, FixedDirection.random(d_z, rng, normalize))
        z_net = NoiseDirectionNet(d_z, noise_dim, hidden, rng, output_init)
        y_net = None
        if kind == "noise+class":
            y_net = ClassDirectionNet(n_classes, noise_dim if noise_dim else None, hidden, rng, output_init)
        return cls(kind, z_net, y_net)

    @property
    def d_z(self) -> int:
        return self.z_part.dim if self.kind == "fixed" else self.z_part.d_in

    @property
    def z_noise_dim(self) -> int:
        return 0 if self.kind == "fixed" else self.z_part.d_eps

    @property
    def y_noise_dim(self) -> int:
        return self.y_part.d_eps if self.y_part is not None else 0

    def params(self) -> list[np.ndarray]:
        ps = list(self.z_part.params())
        if self.y_part is not None:
            ps += self.y_part.params()
        return ps

    def set_params(self, params):
        params = list(params)
        nz = len(self.z_part.params())
        self.z_part.set_params(params[:nz])
        if self.y_part is not None:
            self.y_part.set_params(params[nz:])

    def after_step(self):
        if self.kind == "fixed" and self.z_part.normalize:
            self.z_part.renormalize()

    def transform(self, z, y, alpha, eps_z=None, eps_y=None, params=None):
        """Return transformed ``(z, y)`` tensors; y passes through unless a
        class network is present."""
        nz = len(self.z_part.params())
        pz = None if params is None else params[:nz]
        z_new = self.z_part.transform(z, alpha, eps_z, pz)
        y_new = ad._as_tensor(y)
        if self.y_part is not None:
            py = None if params is None else params[nz:]
            y_new = self.y_part.transform(y, alpha, eps_y, py)
        return z_new, y_new


def _single(fn, x, *rest):
    x = np.asarray(x, dtype=np.float64)
    return fn(x.reshape(1, -1), *rest).data.reshape(x.shape)


def transform_fixed(z, alpha: float, theta) -> np.ndarray:
    """``z + alpha * theta`` for a single vector (theta used as given)."""
    z = np.asarray(z, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if z.shape != theta.shape:
        raise ad.ShapeError(f"latent shape {z.shape} != direction shape {theta.shape}")
    return FixedDirection(theta, normalize=False).transform(z.reshape(1, -1), alpha).data.reshape(z.shape)


def transform_noise(z, alpha: float, eps, net: DirectionNet) -> np.ndarray:
    eps = np.asarray(eps, dtype=np.float64).reshape(1, -1)
    return _single(lambda x: net.transform(x, alpha, eps), z)


def transform_class(y, alpha: float, eps, net: DirectionNet) -> np.ndarray:
    return transform_noise(y, alpha, eps, net)
