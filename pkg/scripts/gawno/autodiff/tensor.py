"""
Dense float64 tensors and the reverse-mode tape.

Every differentiable operation appends one node to the active tape. Calling
backward() on a scalar walks the tape in reverse, accumulates gradients into the
leaves that require them, and frees the tape.
"""

import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..errors import InvalidStateError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]
VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """A dense row-major float64 array with an optional gradient buffer."""

    def __init__(
        self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None
    ) -> None:
        self.data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._produced = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return not self._produced

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying array."""
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar delegates to ops so every path is recorded on the tape.

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Union["Tensor", float]) -> "Tensor":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from . import ops

        return ops.scale(self, -1.0)

    def __truediv__(self, other: float) -> "Tensor":
        from . import ops

        return ops.scale(self, 1.0 / float(other))

    def sum(self) -> "Tensor":
        from . import ops

        return ops.sum(self)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        from . import ops

        return ops.mean(self, axis=axis)


@dataclass
class Node:
    """One recorded operation."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


class Tape:
    """Operation tape for reverse-mode differentiation."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.enabled = True

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, vjp: VJP) -> Tensor:
        """Attach a node producing `output` when any input needs a gradient."""
        output._produced = True
        if not self.enabled or not any(t.requires_grad for t in inputs):
            return output
        output.requires_grad = True
        self.nodes.append(Node(op=op, inputs=tuple(inputs), output=output, vjp=vjp))
        return output

    def clear(self) -> None:
        self.nodes.clear()

    def backward(self, loss: Tensor) -> None:
        """Populate `grad` on every leaf reachable from a scalar loss, then free the tape."""
        if loss.size != 1:
            raise InvalidStateError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if not any(node.output is loss for node in self.nodes):
            raise InvalidStateError("loss was not produced on the current tape")

        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}

        for node in reversed(self.nodes):
            upstream = pending.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = node.vjp(upstream)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in pending:
                    pending[key] = pending[key] + grad
                else:
                    pending[key] = grad
                if tensor.is_leaf:
                    leaves[key] = tensor

        for key, leaf in leaves.items():
            grad = pending[key]
            if leaf.grad is None:
                leaf.grad = np.array(grad, dtype=np.float64, copy=True)
            else:
                leaf.grad += grad

        logger.debug(f"backward over {len(self.nodes)} nodes, {len(leaves)} leaves")
        self.clear()


_tape = Tape()


def get_tape() -> Tape:
    """Return the process-wide tape."""
    return _tape


def backward(loss: Tensor) -> None:
    """Run reverse-mode differentiation from `loss` on the active tape."""
    _tape.backward(loss)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording for inference passes."""
    previous = _tape.enabled
    _tape.enabled = False
    try:
        yield
    finally:
        _tape.enabled = previous
