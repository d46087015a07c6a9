"""Reverse-mode automatic differentiation over float64 numpy tensors."""

from .ops import (
    add,
    bce_loss,
    bce_with_logits,
    concat_channels,
    gelu,
    length_map,
    linear,
    make_op,
    mean,
    mul,
    pool_length,
    repeat_length,
    reshape,
    scale,
    sigmoid,
    sub,
    tanh,
)
from .optim import ParamStore, adam_step, clip_grad_norm
from .tensor import Tape, Tensor, backward, get_tape, no_grad

__all__ = [
    "ParamStore",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "bce_loss",
    "bce_with_logits",
    "clip_grad_norm",
    "concat_channels",
    "gelu",
    "get_tape",
    "length_map",
    "linear",
    "make_op",
    "mean",
    "mul",
    "no_grad",
    "pool_length",
    "repeat_length",
    "reshape",
    "scale",
    "sigmoid",
    "sub",
    "tanh",
]
