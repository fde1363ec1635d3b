from __future__ import annotations

import contextlib
import logging
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

_grad_mode = threading.local()


class ShapeError(ValueError):
    """Raised when tensor shapes violate an operation's contract."""


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Suppresses graph recording on the current thread.

    Tensors produced inside the block are leaves, so whole-image inference does
    not keep every intermediate feature map alive.
    """
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


@dataclass(frozen=True)
class GraphEdge:
    """The operation that produced a tensor, its inputs and its local backward."""

    op: str
    inputs: tuple[Tensor, ...]
    backward: Callable[[FloatArray], tuple[FloatArray | None, ...]]


class Tensor:
    """Rank-4 (n, c, h, w) float64 array and a node of the reverse-mode graph.

    Operation results are never mutated. Parameter leaves are updated in place
    by the optimizer between graphs; `grad` is written by `backward`
    (accumulating) and cleared by `zero_grad`.
    """

    __slots__ = ("_edge", "grad", "requires_grad", "values")

    def __init__(
        self,
        values: npt.ArrayLike,
        *,
        requires_grad: bool = False,
        edge: GraphEdge | None = None,
        copy: bool = True,
    ) -> None:
        array = (
            np.array(values, dtype=np.float64)
            if copy
            else np.asarray(values, dtype=np.float64)
        )
        if array.ndim != 4:
            raise ShapeError(
                f"Tensor values must be rank 4 (n, c, h, w), got shape {array.shape}"
            )
        self.values: FloatArray = array
        self.requires_grad = requires_grad
        self.grad: FloatArray | None = None
        self._edge = edge

    @classmethod
    def from_op(
        cls,
        values: FloatArray,
        op: str,
        inputs: tuple[Tensor, ...],
        backward: Callable[[FloatArray], tuple[FloatArray | None, ...]],
    ) -> Tensor:
        """Wraps an operation result, recording the graph edge when needed."""
        if is_grad_enabled() and any(t.requires_grad for t in inputs):
            return cls(
                values,
                requires_grad=True,
                edge=GraphEdge(op=op, inputs=inputs, backward=backward),
                copy=False,
            )
        return cls(values, copy=False)

    @classmethod
    def zeros(cls, shape: tuple[int, int, int, int], **kwargs: bool) -> Tensor:
        return cls(np.zeros(shape), **kwargs)

    @property
    def edge(self) -> GraphEdge | None:
        return self._edge

    @property
    def is_leaf(self) -> bool:
        return self._edge is None

    @property
    def shape(self) -> tuple[int, int, int, int]:
        n, c, h, w = self.values.shape
        return n, c, h, w

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got {self.shape}")
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.values)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        op = self._edge.op if self._edge is not None else "leaf"
        return (
            f"Tensor(shape={self.shape}, op={op}, requires_grad={self.requires_grad})"
        )


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node.edge is not None:
            stack.extend(
                (parent, False)
                for parent in node.edge.inputs
                if id(parent) not in visited
            )
    return order


def _accumulate_leaf(leaf: Tensor, upstream: FloatArray) -> None:
    if leaf.requires_grad:
        leaf.grad = upstream.copy() if leaf.grad is None else leaf.grad + upstream


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a single-element loss.

    Gradients of tensors consumed several times are summed. Leaf gradients
    accumulate across calls until `zero_grad` is called.
    """
    if loss.size != 1:
        raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")

    pending: dict[int, FloatArray] = {id(loss): np.ones_like(loss.values)}
    for node in reversed(_topological_order(loss)):
        upstream = pending.pop(id(node), None)
        if upstream is None:
            continue
        if node.edge is None:
            _accumulate_leaf(node, upstream)
            continue
        local_grads = node.edge.backward(upstream)
        for parent, grad in zip(node.edge.inputs, local_grads, strict=True):
            if grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = grad if key not in pending else pending[key] + grad


def graph_ops(root: Tensor) -> set[str]:
    """Names of all operations reachable from `root`."""
    return {
        node.edge.op for node in _topological_order(root) if node.edge is not None
    }
