"""Minimal define-by-run reverse-mode autodiff over dense float64 arrays.

A :class:`Tape` records every primitive applied to tensors it watches. Calling
:meth:`Tape.backward` on a scalar walks the records in reverse and returns a
gradient for every watched leaf.

There is no implicit broadcasting. Elementwise primitives require identical
shapes; use :func:`expand` to broadcast explicitly and :func:`scale` for
multiplication by a python scalar.

    >>> tape = Tape()
    >>> x = tape.watch([3.0])
    >>> grads = tape.backward(sum_(square(x)))
    >>> float(grads[x][0])
    6.0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    """A float64 array plus an optional handle into a tape."""

    __slots__ = ("data", "tape", "node")

    def __init__(self, data, tape: "Tape | None" = None, node: int | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def __repr__(self):
        flag = f", node={self.node}" if self.tracked else ""
        return f"Tensor({self.data!r}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


@dataclass
class _Record:
    kind: str
    inputs: tuple[Tensor, ...]
    output_shape: tuple[int, ...]
    vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass(eq=False)
class Tape:
    """Ordered log of primitive applications.

    Node ids are positions in ``records``; leaves occupy a record with no
    inputs. Because a record is appended only after its inputs exist, the
    list is already in topological order.
    """

    records: list[_Record] = field(default_factory=list)
    leaves: list[Tensor] = field(default_factory=list)

    def watch(self, value) -> Tensor:
        arr = value.data if isinstance(value, Tensor) else value
        arr = np.array(arr, dtype=np.float64)
        _check_finite("watch", arr)
        self.records.append(_Record("leaf", (), arr.shape, lambda g: ()))
        leaf = Tensor(arr, self, len(self.records) - 1)
        self.leaves.append(leaf)
        return leaf

    def record(self, kind, inputs, out: np.ndarray, vjp) -> Tensor:
        self.records.append(_Record(kind, tuple(inputs), out.shape, vjp))
        return Tensor(out, self, len(self.records) - 1)

    def __len__(self):
        return len(self.records)

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """Gradients of scalar ``loss`` for every watched leaf on this tape.

        Leaves that ``loss`` does not depend on map to zeros.
        """
        if loss.tape is not self:
            raise ValueError("backward() called on a tensor not recorded on this tape")
        if loss.data.size != 1:
            raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
        adj: list[np.ndarray | None] = [None] * len(self.records)
        adj[loss.node] = np.ones(loss.shape)
        for idx in range(loss.node, -1, -1):
            rec = self.records[idx]
            g = adj[idx]
            if g is None or not rec.inputs:
                continue
            for inp, gi in zip(rec.inputs, rec.vjp(g)):
                if gi is None or not inp.tracked:
                    continue
                if inp.tape is not self:
                    raise ValueError("tensor from a foreign tape used in this graph")
                cur = adj[inp.node]
                adj[inp.node] = gi if cur is None else cur + gi
        return {
            t: adj[t.node] if adj[t.node] is not None else np.zeros(t.shape)
            for t in self.leaves
        }

    def gradients(self, loss: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
        """Like :meth:`backward` but ordered by ``wrt``."""
        g = self.backward(loss)
        return [g[t] for t in wrt]


def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    if not isinstance(loss, Tensor) or not loss.tracked:
        raise ValueError("backward() requires a tape-tracked tensor")
    return loss.tape.backward(loss)


# ---------------------------------------------------------------------------
# primitives

def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(kind: str, arr: np.ndarray):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite value produced by {kind!r}")


def _same_shape(kind, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ShapeError(f"{kind}: shapes {a.shape} and {b.shape} do not conform")


def _emit(kind, inputs, out, vjp) -> Tensor:
    _check_finite(kind, out)
    tape = None
    for t in inputs:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise ValueError(f"{kind}: inputs belong to different tapes")
            tape = t.tape
    if tape is None:
        return Tensor(out)
    return tape.record(kind, inputs, out, vjp)


def _swap(m):
    return np.swapaxes(m, -1, -2)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("add", a, b)
    return _emit("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("sub", a, b)
    return _emit("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _emit("mul", (a, b), ad * bd, lambda g: (g * bd, g * ad))


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    return _emit("scale", (a,), a.data * c, lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    """2-D matrix product, matrix-vector product, or a batched product of
    two 3-D stacks with equal batch size."""
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 1:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
        return _emit("matmul", (a, b), ad @ bd, lambda g: (np.outer(g, bd), ad.T @ g))
    ok = (
        ad.ndim == bd.ndim
        and ad.ndim in (2, 3)
        and ad.shape[-1] == bd.shape[-2]
        and ad.shape[:-2] == bd.shape[:-2]
    )
    if not ok:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    return _emit(
        "matmul", (a, b), ad @ bd,
        lambda g: (g @ _swap(bd), _swap(ad) @ g),
    )


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _emit("tanh", (a,), out, lambda g: (g * (1.0 - out * out),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    # subgradient at 0 is 0
    on = a.data > 0
    return _emit("relu", (a,), np.where(on, a.data, 0.0), lambda g: (g * on,))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    out = 0.5 * (1.0 + np.tanh(0.5 * x))
    return _emit("sigmoid", (a,), out, lambda g: (g * out * (1.0 - out),))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _emit("exp", (a,), out, lambda g: (g * out,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x)
    return _emit("log", (a,), out, lambda g: (g / x,))


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(invalid="ignore"):
        out = np.sqrt(a.data)
    with np.errstate(divide="ignore"):
        d = 0.5 / out
    return _emit("sqrt", (a,), out, lambda g: (g * d,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    return _emit("square", (a,), x * x, lambda g: (2.0 * g * x,))


def clamp(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    # zero gradient outside [lo, hi]
    inside = (x >= lo) & (x <= hi)
    return _emit("clamp", (a,), np.clip(x, lo, hi), lambda g: (g * inside,))


def _norm_axis(axis, ndim):
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(ax % ndim for ax in axes)


def sum_(a, axis=None) -> Tensor:
    a = _as_tensor(a)
    shape = a.shape
    axes = _norm_axis(axis, a.data.ndim)
    out = np.sum(a.data, axis=axes)

    def vjp(g):
        if axes is not None:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit("sum", (a,), np.asarray(out, dtype=np.float64), vjp)


def mean(a, axis=None) -> Tensor:
    a = _as_tensor(a)
    axes = _norm_axis(axis, a.data.ndim)
    count = a.data.size if axes is None else int(np.prod([a.shape[ax] for ax in axes]))
    return scale(sum_(a, axis), 1.0 / count)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    if not ts:
        raise ShapeError("concat of nothing")
    nd = ts[0].data.ndim
    axis = axis % nd
    for t in ts[1:]:
        if t.data.ndim != nd or any(
            t.shape[i] != ts[0].shape[i] for i in range(nd) if i != axis
        ):
            raise ShapeError("concat: shapes do not conform")
    out = np.concatenate([t.data for t in ts], axis=axis)
    cuts = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _emit("concat", ts, out, lambda g: np.split(g, cuts, axis=axis))


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    return _emit("reshape", (a,), out, lambda g: (g.reshape(old),))


def transpose(a, axes=None) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(reversed(range(a.data.ndim))) if axes is None else tuple(axes)
    inv = tuple(np.argsort(axes))
    return _emit("transpose", (a,), np.transpose(a.data, axes), lambda g: (np.transpose(g, inv),))


def slice_(a, axis: int, start: int, stop: int) -> Tensor:
    a = _as_tensor(a)
    axis = axis % a.data.ndim
    if not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for extent {a.shape[axis]}")
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        full[idx] = g
        return (full,)

    return _emit("slice", (a,), a.data[idx].copy(), vjp)


def expand(a, shape) -> Tensor:
    """Explicit broadcast to ``shape`` (numpy rules); gradient sums back."""
    a = _as_tensor(a)
    shape = tuple(shape)
    src = a.shape
    try:
        out = np.broadcast_to(a.data, shape).copy()
    except ValueError:
        raise ShapeError(f"expand: cannot broadcast {src} to {shape}") from None
    lead = len(shape) - len(src)
    axes = tuple(range(lead)) + tuple(
        lead + i for i, n in enumerate(src) if n == 1 and shape[lead + i] != 1
    )

    def vjp(g):
        return (np.sum(g, axis=axes, keepdims=True).reshape(src),)

    return _emit("expand", (a,), out, vjp)


PRIMITIVES: dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "matmul": matmul,
    "tanh": tanh,
    "relu": relu,
    "sigmoid": sigmoid,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "square": square,
    "sum": sum_,
    "mean": mean,
    "concat": concat,
    "clamp": clamp,
    "reshape": reshape,
    "transpose": transpose,
    "slice": slice_,
    "expand": expand,
}


def apply(kind: str, *inputs, **params) -> Tensor:
    """Apply primitive ``kind`` by name, e.g. ``apply("clamp", x, lo=0, hi=1)``."""
    try:
        fn = PRIMITIVES[kind]
    except KeyError:
        raise ValueError(f"unknown primitive {kind!r}") from None
    if kind == "concat":
        return fn(list(inputs), **params)
    return fn(*inputs, **params)


def gradient_check(f, x, step: float = 1e-6) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``x`` is an array or a list of arrays; ``f`` receives tensors of the same
    structure and must return a scalar tensor. The error per coordinate is
    ``|g_ad - g_fd| / max(1, |g_ad|, |g_fd|)``.
    """
    if not 1e-8 <= step <= 1e-4:
        raise ValueError("step must lie in [1e-8, 1e-4]")
    many = isinstance(x, (list, tuple))
    xs = [np.array(v, dtype=np.float64) for v in (x if many else [x])]

    def call(arrs, tape=None):
        args = [tape.watch(a) if tape is not None else Tensor(a) for a in arrs]
        out = f(args if many else args[0])
        return out, args

    tape = Tape()
    out, args = call(xs, tape)
    if not np.isfinite(out.data).all():
        raise NonFiniteError("f is non-finite at x")
    g_ad = tape.gradients(out, args) if out.tracked else [np.zeros_like(a) for a in xs]

    worst = 0.0
    for k, base in enumerate(xs):
        flat = base.reshape(-1)
        gk = g_ad[k].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = call(xs)[0].item()
            flat[i] = orig - step
            fm = call(xs)[0].item()
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NonFiniteError("f is non-finite at a probe point")
            fd = (fp - fm) / (2.0 * step)
            err = abs(gk[i] - fd) / max(1.0, abs(gk[i]), abs(fd))
            worst = max(worst, err)
    return worst
