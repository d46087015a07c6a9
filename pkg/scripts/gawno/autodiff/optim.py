"""
Named parameter storage and the Adam optimizer with decoupled weight decay.
"""

import logging
import math
from collections.abc import Iterator
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, InvalidStateError
from .tensor import Tensor

logger = logging.getLogger(__name__)


class ParamStore:
    """Ordered collection of trainable tensors plus their Adam moments."""

    def __init__(self) -> None:
        self.entries: dict[str, Tensor] = {}
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        """Register a new trainable tensor under a unique name."""
        if name in self.entries:
            raise ConfigurationError(f"Duplicate parameter name: {name}")
        tensor = Tensor(data, requires_grad=True, name=name)
        self.entries[name] = tensor
        self._m[name] = np.zeros_like(tensor.data)
        self._v[name] = np.zeros_like(tensor.data)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.entries[name]

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self.entries.items())

    @property
    def num_parameters(self) -> int:
        return sum(t.size for t in self.entries.values())

    def moments(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return self._m[name], self._v[name]

    def zero_grad(self) -> None:
        for tensor in self.entries.values():
            tensor.grad = None

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copy every parameter array."""
        return {name: t.data.copy() for name, t in self.entries.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place; names and shapes must match."""
        for name, tensor in self.entries.items():
            if name not in arrays:
                raise ConfigurationError(f"Missing parameter: {name}")
            if arrays[name].shape != tensor.shape:
                raise ConfigurationError(
                    f"Parameter {name}: expected shape {tensor.shape}, got {arrays[name].shape}"
                )
            tensor.data = np.ascontiguousarray(arrays[name], dtype=np.float64).copy()


def clip_grad_norm(store: ParamStore, max_norm: float) -> float:
    """Rescale all gradients so their joint L2 norm is at most `max_norm`."""
    total = math.sqrt(
        sum(float(np.sum(t.grad**2)) for t in store.entries.values() if t.grad is not None)
    )
    if total > max_norm > 0:
        factor = max_norm / total
        for tensor in store.entries.values():
            if tensor.grad is not None:
                tensor.grad *= factor
    return total


def adam_step(
    store: ParamStore,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
    grad_clip: Optional[float] = None,
) -> None:
    """
    Apply one Adam update to every parameter in the store.

    Weight decay is decoupled: theta <- theta - lr * wd * theta runs before the
    bias-corrected moment update. Gradients are zeroed afterwards.

    Raises:
        InvalidStateError: If any parameter has no gradient.
    """
    for name, tensor in store.entries.items():
        if tensor.grad is None:
            raise InvalidStateError(f"Parameter {name} has no gradient")
    if grad_clip:
        clip_grad_norm(store, grad_clip)

    store.step_count += 1
    step = store.step_count
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step

    for name, tensor in store.entries.items():
        grad = tensor.grad
        m, v = store._m[name], store._v[name]
        if weight_decay:
            tensor.data -= lr * weight_decay * tensor.data
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
        tensor.grad = np.zeros_like(tensor.data)
