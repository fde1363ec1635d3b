"""Differentiable primitives of the super-resolution graph.

Every forward keeps a fixed reduction order so repeated calls are bit-identical.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mlrn.tensor.tensor import FloatArray, ShapeError, Tensor

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvParams:
    """Weight (c_out, c_in, k_h, k_w), bias (1, c_out, 1, 1) and zero padding."""

    weight: Tensor
    bias: Tensor
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        c_out = self.weight.shape[0]
        if self.bias.shape != (1, c_out, 1, 1):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match weight with "
                f"{c_out} output channels"
            )
        if min(self.padding) < 0:
            raise ShapeError(f"padding must be nonnegative, got {self.padding}")

    @classmethod
    def same_size(cls, weight: Tensor, bias: Tensor) -> ConvParams:
        """Padding that keeps the spatial size; only odd kernels qualify."""
        _, _, k_h, k_w = weight.shape
        if k_h % 2 == 0 or k_w % 2 == 0:
            raise ShapeError(f"same-size padding needs odd kernels, got {k_h}x{k_w}")
        padding = ((k_h - 1) // 2, (k_w - 1) // 2)
        return cls(weight=weight, bias=bias, padding=padding)

    @property
    def c_out(self) -> int:
        return self.weight.shape[0]

    @property
    def c_in(self) -> int:
        return self.weight.shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]

    def tensors(self) -> tuple[Tensor, Tensor]:
        return self.weight, self.bias

    def count(self) -> int:
        return self.weight.size + self.bias.size


def _conv2d_forward(
    x_padded: FloatArray,
    weight: FloatArray,
    bias: FloatArray,
    out_shape: tuple[int, int, int, int],
) -> FloatArray:
    n, c_out, h_out, w_out = out_shape
    _, c_in, k_h, k_w = weight.shape
    out = np.empty(out_shape)
    out[...] = bias
    # channel-major, then kernel row, then kernel column: the order of the
    # scalar definition, so every output element sees the same sum sequence
    for i in range(c_in):
        for dy in range(k_h):
            for dx in range(k_w):
                tap = weight[:, i, dy, dx].reshape(1, c_out, 1, 1)
                out += tap * x_padded[:, i : i + 1, dy : dy + h_out, dx : dx + w_out]
    return out


def _conv2d_input_grad(
    grad_out: FloatArray, weight: FloatArray, padded_shape: tuple[int, ...]
) -> FloatArray:
    _, _, h_out, w_out = grad_out.shape
    _, _, k_h, k_w = weight.shape
    grad_padded = np.zeros(padded_shape)
    for dy in range(k_h):
        for dx in range(k_w):
            contribution = np.tensordot(
                grad_out, weight[:, :, dy, dx], axes=([1], [0])
            )
            grad_padded[:, :, dy : dy + h_out, dx : dx + w_out] += np.moveaxis(
                contribution, 3, 1
            )
    return grad_padded


def _conv2d_weight_grad(
    grad_out: FloatArray, x_padded: FloatArray, weight_shape: tuple[int, ...]
) -> FloatArray:
    _, _, h_out, w_out = grad_out.shape
    _, _, k_h, k_w = weight_shape
    grad_weight = np.empty(weight_shape)
    for dy in range(k_h):
        for dx in range(k_w):
            window = x_padded[:, :, dy : dy + h_out, dx : dx + w_out]
            grad_weight[:, :, dy, dx] = np.tensordot(
                grad_out, window, axes=([0, 2, 3], [0, 2, 3])
            )
    return grad_weight


def conv2d(x: Tensor, params: ConvParams) -> Tensor:
    """Stride-1 2-D convolution (cross-correlation) with zero padding."""
    n, c_in, h, w = x.shape
    if c_in != params.c_in:
        raise ShapeError(
            f"conv2d input has {c_in} channels but weight {params.weight.shape} "
            f"expects {params.c_in}"
        )
    p_h, p_w = params.padding
    k_h, k_w = params.kernel_size
    h_out, w_out = h + 2 * p_h - k_h + 1, w + 2 * p_w - k_w + 1
    if h_out < 1 or w_out < 1:
        raise ShapeError(
            f"conv2d kernel {k_h}x{k_w} with padding {params.padding} does not fit "
            f"a {h}x{w} input"
        )

    x_padded = np.pad(x.values, ((0, 0), (0, 0), (p_h, p_h), (p_w, p_w)))
    weight = params.weight.values
    out = _conv2d_forward(
        x_padded, weight, params.bias.values, (n, params.c_out, h_out, w_out)
    )

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        grad_x = None
        if x.requires_grad:
            grad_padded = _conv2d_input_grad(grad_out, weight, x_padded.shape)
            grad_x = grad_padded[:, :, p_h : p_h + h, p_w : p_w + w]
        grad_weight = (
            _conv2d_weight_grad(grad_out, x_padded, weight.shape)
            if params.weight.requires_grad
            else None
        )
        grad_bias = (
            grad_out.sum(axis=(0, 2, 3)).reshape(1, -1, 1, 1)
            if params.bias.requires_grad
            else None
        )
        return grad_x, grad_weight, grad_bias

    return Tensor.from_op(out, "conv2d", (x, params.weight, params.bias), backward)


def relu(x: Tensor) -> Tensor:
    """max(0, x); the subgradient at exactly 0 is 0."""
    active = x.values > 0
    out = np.where(active, x.values, 0.0)

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return (np.where(active, grad_out, 0.0),)

    return Tensor.from_op(out, "relu", (x,), backward)


def concat_channels(inputs: Sequence[Tensor]) -> Tensor:
    """Stacks tensors along the channel axis in argument order."""
    if not inputs:
        raise ShapeError("concat_channels needs at least one input")
    n, _, h, w = inputs[0].shape
    for tensor in inputs[1:]:
        if (tensor.shape[0], tensor.shape[2], tensor.shape[3]) != (n, h, w):
            raise ShapeError(
                f"concat_channels inputs disagree: {inputs[0].shape} vs {tensor.shape}"
            )
    out = np.concatenate([t.values for t in inputs], axis=1)
    bounds = np.cumsum([0] + [t.shape[1] for t in inputs])

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return tuple(
            grad_out[:, start:stop] for start, stop in zip(bounds[:-1], bounds[1:])
        )

    return Tensor.from_op(out, "concat_channels", tuple(inputs), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add needs identical shapes, got {a.shape} and {b.shape}")

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return grad_out, grad_out

    return Tensor.from_op(a.values + b.values, "add", (a, b), backward)


def _depth_to_space(values: FloatArray, r: int) -> FloatArray:
    n, c, h, w = values.shape
    c_out = c // (r * r)
    # channel o*r*r + dy*r + dx lands on pixel (y*r + dy, x*r + dx)
    return (
        values.reshape(n, c_out, r, r, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, c_out, h * r, w * r)
    )


def _space_to_depth(values: FloatArray, r: int) -> FloatArray:
    n, c, h, w = values.shape
    return (
        values.reshape(n, c, h // r, r, w // r, r)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, c * r * r, h // r, w // r)
    )


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Sub-pixel rearrangement (n, c*r*r, h, w) -> (n, c, h*r, w*r)."""
    if r < 1:
        raise ShapeError(f"pixel_shuffle factor must be positive, got {r}")
    if x.shape[1] % (r * r) != 0:
        raise ShapeError(
            f"pixel_shuffle needs channels divisible by {r * r}, got {x.shape[1]}"
        )

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return (_space_to_depth(grad_out, r),)

    out = _depth_to_space(x.values, r)
    return Tensor.from_op(out, "pixel_shuffle", (x,), backward)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Exact inverse of `pixel_shuffle`."""
    _, _, h, w = x.shape
    if r < 1 or h % r or w % r:
        raise ShapeError(f"pixel_unshuffle needs h, w divisible by {r}, got {h}x{w}")

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return (_depth_to_space(grad_out, r),)

    out = _space_to_depth(x.values, r)
    return Tensor.from_op(out, "pixel_unshuffle", (x,), backward)


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error as a (1, 1, 1, 1) tensor; no gradient flows to target."""
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.values - target.values
    count = diff.size
    out = np.full((1, 1, 1, 1), np.abs(diff).mean())

    def backward(grad_out: FloatArray) -> tuple[FloatArray | None, ...]:
        return np.sign(diff) * (grad_out.reshape(()) / count), None

    return Tensor.from_op(out, "l1_loss", (pred, target), backward)
