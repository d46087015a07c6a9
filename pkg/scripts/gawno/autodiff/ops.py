"""
Differentiable primitives.

Each function computes its forward value with numpy and records a
vector-Jacobian product on the active tape. Layers built elsewhere in the
package compose these primitives or register their own linear maps through
make_op().
"""

import math
from typing import Optional, Union

import numpy as np
from scipy.special import erf

from ..errors import DimensionError
from .tensor import VJP, Tensor, get_tape

BCE_EPS = 1e-7

Operand = Union[Tensor, float, int, np.ndarray]


def make_op(op: str, inputs: tuple[Tensor, ...], data: np.ndarray, vjp: VJP) -> Tensor:
    """Wrap `data` in a Tensor and record it as the output of `op`."""
    return get_tape().record(op, inputs, Tensor(data), vjp)


def as_tensor(value: Operand) -> Tensor:
    """Promote constants to non-differentiable tensors."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        "add",
        (a, b),
        a.data + b.data,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        "sub",
        (a, b),
        a.data - b.data,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        "mul",
        (a, b),
        a.data * b.data,
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def scale(a: Tensor, factor: float) -> Tensor:
    return make_op("scale", (a,), a.data * factor, lambda g: (g * factor,))


def sum(a: Tensor) -> Tensor:  # noqa: A001
    return make_op("sum", (a,), np.asarray(a.data.sum()), lambda g: (np.full(a.shape, g),))


def mean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    """Mean over all entries, or over one axis (which is removed)."""
    if axis is None:
        count = max(a.size, 1)
        return make_op(
            "mean",
            (a,),
            np.asarray(a.data.mean()),
            lambda g: (np.full(a.shape, g / count),),
        )
    count = a.shape[axis]

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.broadcast_to(np.expand_dims(g, axis) / count, a.shape).copy(),)

    return make_op("mean_axis", (a,), a.data.mean(axis=axis), vjp)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return make_op("reshape", (a,), a.data.reshape(shape), lambda g: (g.reshape(a.shape),))


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Channelwise affine map: out[i,c,t] = sum_f W[c,f] x[i,f,t] + b[c]."""
    if x.ndim != 3 or weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise DimensionError(
            f"linear: input {x.shape} does not match weight {weight.shape}"
        )
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"linear: bias {bias.shape} does not match weight {weight.shape}")

    out = np.einsum("cf,bfn->bcn", weight.data, x.data) + bias.data[None, :, None]

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.einsum("cf,bcn->bfn", weight.data, g),
            np.einsum("bcn,bfn->cf", g, x.data),
            g.sum(axis=(0, 2)),
        )

    return make_op("linear", (x, weight, bias), out, vjp)


def gelu(x: Tensor) -> Tensor:
    """x * Phi(x) with the exact erf form of the normal CDF."""
    cdf = 0.5 * (1.0 + erf(x.data / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x.data**2) / math.sqrt(2.0 * math.pi)
    return make_op("gelu", (x,), x.data * cdf, lambda g: (g * (cdf + x.data * pdf),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return make_op("tanh", (x,), out, lambda g: (g * (1.0 - out**2),))


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp() never overflows.
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    out = _stable_sigmoid(x.data)
    return make_op("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def bce_loss(p: Tensor, target: Union[np.ndarray, float]) -> Tensor:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps]."""
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), p.shape)
    clipped = np.clip(p.data, BCE_EPS, 1.0 - BCE_EPS)
    inside = (p.data >= BCE_EPS) & (p.data <= 1.0 - BCE_EPS)
    count = max(p.size, 1)
    loss = -(t * np.log(clipped) + (1.0 - t) * np.log(1.0 - clipped)).mean()

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        dp = (clipped - t) / (clipped * (1.0 - clipped)) / count
        return (g * dp * inside,)

    return make_op("bce", (p,), np.asarray(loss), vjp)


def bce_with_logits(logit: Tensor, target: Union[np.ndarray, float]) -> Tensor:
    """
    Mean binary cross-entropy of sigmoid(logit) against `target`.

    Evaluated as softplus(l) - t * l with softplus(l) = max(l, 0) + log1p(exp(-|l|)),
    so no probability is ever clamped and the gradient (sigmoid(l) - t) / count
    stays finite and nonzero for a confidently wrong score.
    """
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), logit.shape)
    z = logit.data
    count = max(logit.size, 1)
    loss = (np.maximum(z, 0.0) - t * z + np.log1p(np.exp(-np.abs(z)))).mean()
    prob = _stable_sigmoid(np.asarray(z, dtype=np.float64))
    return make_op(
        "bce_logits", (logit,), np.asarray(loss), lambda g: (g * (prob - t) / count,)
    )


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Stack channels of `a` before channels of `b`."""
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionError(f"concat_channels: cannot join {a.shape} and {b.shape}")
    split = a.shape[1]
    return make_op(
        "concat",
        (a, b),
        np.concatenate([a.data, b.data], axis=1),
        lambda g: (g[:, :split, :], g[:, split:, :]),
    )


def length_map(x: Tensor, matrix: np.ndarray) -> Tensor:
    """Apply a fixed linear map along the length axis: out[..., k] = sum_t M[k, t] x[..., t]."""
    if x.shape[-1] != matrix.shape[1]:
        raise DimensionError(
            f"length_map: input length {x.shape[-1]} does not match map {matrix.shape}"
        )
    return make_op("length_map", (x,), x.data @ matrix.T, lambda g: (g @ matrix,))


def pool_length(x: Tensor, factor: int) -> Tensor:
    """Average consecutive groups of `factor` samples along the length axis."""
    if factor == 1:
        return x
    n = x.shape[-1]
    if n % factor:
        raise DimensionError(f"pool_length: length {n} is not divisible by {factor}")
    out = x.data.reshape(*x.shape[:-1], n // factor, factor).mean(axis=-1)
    return make_op(
        "pool_length", (x,), out, lambda g: (np.repeat(g, factor, axis=-1) / factor,)
    )


def repeat_length(x: Tensor, factor: int) -> Tensor:
    """Duplicate every sample `factor` times along the length axis."""
    if factor == 1:
        return x
    n = x.shape[-1]

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.reshape(*g.shape[:-1], n, factor).sum(axis=-1),)

    return make_op("repeat_length", (x,), np.repeat(x.data, factor, axis=-1), vjp)
