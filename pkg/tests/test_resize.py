from __future__ import annotations

import math

import numpy as np
import pytest

from mlrn.image import Image, bicubic_resize, weight_matrix
from mlrn.image.resize import cubic


def ramp(length: int) -> Image:
    return Image(np.arange(length, dtype=float).reshape(1, 1, length))


def keys(x: float) -> float:
    ax = abs(x)
    if ax <= 1:
        return 1.5 * ax**3 - 2.5 * ax**2 + 1.0
    if ax <= 2:
        return -0.5 * ax**3 + 2.5 * ax**2 - 4.0 * ax + 2.0
    return 0.0


def contributions(in_length: int, out_length: int) -> list[list[tuple[int, float]]]:
    """Per output pixel, the one-based tap positions and normalized weights."""
    scale = out_length / in_length
    width = 4.0 / scale if scale < 1 else 4.0
    rows = []
    for i in range(1, out_length + 1):
        u = i / scale + 0.5 * (1 - 1 / scale)
        left = math.floor(u - width / 2)
        taps = [left + k for k in range(math.ceil(width) + 2)]
        if scale < 1:
            weights = [scale * keys(scale * (u - j)) for j in taps]
        else:
            weights = [keys(u - j) for j in taps]
        total = sum(weights)
        rows.append([(j, w / total) for j, w in zip(taps, weights)])
    return rows


def reference_matrix(in_length: int, out_length: int, boundary: str) -> np.ndarray:
    mirrored = list(range(1, in_length + 1)) + list(range(in_length, 0, -1))
    matrix = np.zeros((out_length, in_length))
    for row, taps in enumerate(contributions(in_length, out_length)):
        for j, w in taps:
            if boundary == "replicate":
                source = min(max(j, 1), in_length)
            else:
                source = mirrored[(j - 1) % (2 * in_length)]
            matrix[row, source - 1] += w
    return matrix


def antisymmetric_sample(signal: np.ndarray, j: int) -> float:
    """Zero-based sample of the signal extended by point reflection at each edge."""
    last = len(signal) - 1
    if last == 0:
        return float(signal[0])
    if j < 0:
        return 2 * signal[0] - antisymmetric_sample(signal, -j)
    if j > last:
        return 2 * signal[last] - antisymmetric_sample(signal, 2 * last - j)
    return float(signal[j])


def reference_antisymmetric(signal: np.ndarray, out_length: int) -> np.ndarray:
    return np.array(
        [
            sum(w * antisymmetric_sample(signal, j - 1) for j, w in taps)
            for taps in contributions(len(signal), out_length)
        ]
    )


def test_cubic_kernel_values():
    np.testing.assert_allclose(
        cubic(np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.5])),
        [1.0, 0.5625, 0.0, -0.0625, 0.0, 0.0],
    )


@pytest.mark.parametrize("boundary", ["replicate", "symmetric"])
@pytest.mark.parametrize(
    ("in_length", "out_length"), [(8, 4), (7, 21), (9, 4), (5, 13), (10, 7), (3, 1)]
)
def test_weight_matrix_matches_matlab_table(in_length, out_length, boundary):
    np.testing.assert_allclose(
        weight_matrix(in_length, out_length, boundary),
        reference_matrix(in_length, out_length, boundary),
        atol=1e-12,
    )


@pytest.mark.parametrize(
    ("in_length", "out_length"), [(8, 4), (7, 21), (9, 4), (5, 13), (1, 3), (2, 9)]
)
def test_antisymmetric_matches_point_reflection(rng, in_length, out_length):
    signal = rng.uniform(0, 255, in_length)
    out = bicubic_resize(
        Image(signal.reshape(1, 1, in_length)), 1, out_length, "antisymmetric"
    )
    np.testing.assert_allclose(
        out.data.ravel(), reference_antisymmetric(signal, out_length), atol=1e-9
    )


def test_ramp_downscale_is_exact_with_antisymmetric_edges():
    out = bicubic_resize(ramp(8), 1, 4, boundary="antisymmetric")
    np.testing.assert_allclose(out.data.ravel(), [0.5, 2.5, 4.5, 6.5], atol=1e-12)


def test_ramp_downscale_bends_at_the_border_with_replicate_edges():
    out = bicubic_resize(ramp(8), 1, 4).data.ravel()
    np.testing.assert_allclose(out, reference_matrix(8, 4, "replicate") @ np.arange(8))
    assert abs(out[0] - 0.5) > 1e-3


def test_ramp_downscale_symmetric_differs_at_the_border():
    out = bicubic_resize(ramp(8), 1, 4, boundary="symmetric")
    assert out.data[0, 0, 0] == pytest.approx(0.44921875)


@pytest.mark.parametrize(
    ("size", "out"),
    [((8, 8), (13, 13)), ((5, 7), (12, 20)), ((7, 4), (21, 12)),
     ((16, 16), (8, 8)), ((12, 12), (4, 6)), ((12, 9), (3, 3))],
)
def test_affine_image_reproduced_everywhere_with_antisymmetric_edges(size, out):
    (in_h, in_w), (out_h, out_w) = size, out
    y, x = np.mgrid[0:in_h, 0:in_w].astype(float)
    image = Image((3.0 + 0.7 * y - 1.9 * x)[np.newaxis])
    resized = bicubic_resize(image, out_h, out_w, boundary="antisymmetric")
    cy = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    cx = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    expected = 3.0 + 0.7 * cy[:, np.newaxis] - 1.9 * cx[np.newaxis, :]
    np.testing.assert_allclose(resized.data[0], expected, atol=1e-9)


@pytest.mark.parametrize("boundary", ["replicate", "symmetric", "antisymmetric"])
@pytest.mark.parametrize(("in_length", "out_length"), [(7, 21), (9, 4), (5, 13)])
def test_weight_rows_sum_to_one(in_length, out_length, boundary):
    matrix = weight_matrix(in_length, out_length, boundary)
    assert matrix.shape == (out_length, in_length)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0)


def test_constant_image_survives_any_resize():
    image = Image(np.full((3, 9, 11), 77.0))
    out = bicubic_resize(image, 4, 20)
    assert (out.channels, out.height, out.width) == (3, 4, 20)
    np.testing.assert_allclose(out.data, 77.0)


def test_upscale_reproduces_a_ramp_away_from_the_border():
    r = 3
    out = bicubic_resize(ramp(16), 1, 16 * r).data.ravel()
    centers = (np.arange(16 * r) + 0.5) / r - 0.5
    interior = slice(2 * r, 14 * r)
    np.testing.assert_allclose(out[interior], centers[interior], atol=1e-12)


def test_resize_is_separable(rng):
    column, row = rng.uniform(0, 255, 10), rng.uniform(0, 255, 12)
    image = Image(np.outer(column, row)[np.newaxis])
    out = bicubic_resize(image, 5, 6)
    expected = np.outer(
        bicubic_resize(Image(column.reshape(1, 10, 1)), 5, 1).data.ravel(),
        bicubic_resize(Image(row.reshape(1, 1, 12)), 1, 6).data.ravel(),
    )
    np.testing.assert_allclose(out.data[0], expected)


def test_same_size_returns_a_copy():
    image = ramp(4)
    out = bicubic_resize(image, 1, 4)
    out.data[...] = 0.0
    np.testing.assert_array_equal(image.data.ravel(), [0, 1, 2, 3])


def test_rejects_empty_output():
    with pytest.raises(ValueError, match="positive"):
        bicubic_resize(ramp(4), 0, 2)


def test_rejects_unknown_boundary():
    with pytest.raises(ValueError, match="boundary"):
        bicubic_resize(ramp(4), 1, 2, boundary="wrap")  # type: ignore[arg-type]
