"""Separable bicubic resampling with MATLAB `imresize` conventions.

Keys cubic kernel (a = -0.5), half-pixel coordinate mapping and, when
shrinking, a kernel widened by the inverse scale with renormalized weights.

Taps that fall outside the signal are resolved by the boundary mode:

- "replicate" repeats the edge sample (the default),
- "symmetric" mirrors with the edge sample repeated, as MATLAB does,
- "antisymmetric" reflects through the edge sample, E(-k) = 2 x[0] - x[k].

Only "antisymmetric" keeps affine signals affine up to the border; the other
two bend a ramp within half a kernel width of each edge.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
import numpy.typing as npt

from mlrn.image.image import Image

if TYPE_CHECKING:
    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]
Boundary = Literal["replicate", "symmetric", "antisymmetric"]
BOUNDARIES: tuple[Boundary, ...] = ("replicate", "symmetric", "antisymmetric")

KERNEL_WIDTH = 4.0


def cubic(x: FloatArray) -> FloatArray:
    absx = np.abs(x)
    absx2 = absx * absx
    absx3 = absx2 * absx
    near = (1.5 * absx3 - 2.5 * absx2 + 1.0) * (absx <= 1)
    far = (-0.5 * absx3 + 2.5 * absx2 - 4.0 * absx + 2.0) * ((absx > 1) & (absx <= 2))
    return near + far


def _boundary_indices(
    indices: IntArray, in_length: int, boundary: Boundary
) -> IntArray:
    if boundary == "replicate":
        return np.clip(indices, 0, in_length - 1)
    # mirror with the edge sample repeated: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
    mirrored = np.concatenate([np.arange(in_length), np.arange(in_length)[::-1]])
    return mirrored[np.mod(indices, 2 * in_length)]


def _fold_antisymmetric(
    rows: IntArray, cols: IntArray, weights: FloatArray, in_length: int
) -> tuple[IntArray, IntArray, FloatArray]:
    """Rewrites out-of-range taps as 2 * edge - mirror until all are in range."""
    if in_length == 1:
        return rows, np.zeros_like(cols), weights
    last = in_length - 1
    parts: list[tuple[IntArray, IntArray, FloatArray]] = []
    while True:
        outside = (cols < 0) | (cols > last)
        if not outside.any():
            break
        edge = np.where(cols < 0, 0, last)
        parts.append((rows[outside], edge[outside], 2.0 * weights[outside]))
        cols = np.where(outside, 2 * edge - cols, cols)
        weights = np.where(outside, -weights, weights)
    parts.append((rows, cols, weights))
    return (
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
        np.concatenate([part[2] for part in parts]),
    )


def weight_matrix(
    in_length: int, out_length: int, boundary: Boundary = "replicate"
) -> FloatArray:
    """(out_length, in_length) matrix M with resized = M @ signal."""
    scale = out_length / in_length
    width = KERNEL_WIDTH / scale if scale < 1 else KERNEL_WIDTH

    # source coordinate of output pixel i, zero-based
    centers = (np.arange(out_length) + 0.5) / scale - 0.5
    first = np.floor(centers - width / 2).astype(np.int64) + 1
    taps = first[:, np.newaxis] + np.arange(math.ceil(width) + 1)

    distance = centers[:, np.newaxis] - taps
    weights = scale * cubic(scale * distance) if scale < 1 else cubic(distance)
    weights /= weights.sum(axis=1, keepdims=True)

    rows = np.broadcast_to(np.arange(out_length)[:, np.newaxis], taps.shape).ravel()
    if boundary == "antisymmetric":
        rows, cols, values = _fold_antisymmetric(
            rows, taps.ravel(), weights.ravel(), in_length
        )
    else:
        cols = _boundary_indices(taps.ravel(), in_length, boundary)
        values = weights.ravel()

    matrix = np.zeros((out_length, in_length))
    np.add.at(matrix, (rows, cols), values)
    return matrix


def bicubic_resize(
    image: Image, out_h: int, out_w: int, boundary: Boundary = "replicate"
) -> Image:
    """Resizes every channel independently in float; no quantization.

    Affine images come back affine for upscaling at any ratio and for
    downscaling by an integer factor. A non-integer shrink samples the widened
    kernel off its own grid, so the renormalized weights only approximate it.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    data = image.data
    if out_h != image.height:
        data = np.matmul(weight_matrix(image.height, out_h, boundary), data)
    if out_w != image.width:
        data = np.matmul(data, weight_matrix(image.width, out_w, boundary).T)
    logger.debug("Resized %dx%d -> %dx%d", image.height, image.width, out_h, out_w)
    return Image(np.array(data, order="C"))
