from __future__ import annotations

import itertools

import numpy as np
import pytest

from mlrn.image import (
    Dataset,
    DatasetError,
    Image,
    ImagePair,
    PatchSampler,
    augment,
    denormalize,
    normalize,
    sample_patch,
)
from mlrn.tensor import ShapeError


def nearest_pair(rng: np.random.Generator, r: int = 2, size: int = 6) -> ImagePair:
    """HR is LR with every pixel repeated r x r times, so alignment is checkable."""
    lr = rng.uniform(0, 255, (3, size, size + 1))
    hr = np.kron(lr, np.ones((1, r, r)))
    return ImagePair(hr=Image(hr), lr=Image(lr), scale=r, source_id="pair")


def assert_aligned(lr_patch: np.ndarray, hr_patch: np.ndarray, r: int) -> None:
    np.testing.assert_array_equal(hr_patch, np.kron(lr_patch, np.ones((1, r, r))))


def test_sample_patch_keeps_hr_aligned_with_lr(rng):
    pair = nearest_pair(rng, r=3)
    for _ in range(20):
        lr_patch, hr_patch = sample_patch(pair, 9, rng)
        assert lr_patch.shape == (3, 3, 3)
        assert hr_patch.shape == (3, 9, 9)
        assert_aligned(lr_patch, hr_patch, 3)


def test_augment_transforms_both_patches_alike(rng):
    pair = nearest_pair(rng)
    lr_patch, hr_patch = sample_patch(pair, 8, rng)
    for _ in range(20):
        lr_aug, hr_aug = augment(lr_patch, hr_patch, rng)
        assert_aligned(lr_aug, hr_aug, 2)
        assert lr_aug.flags["C_CONTIGUOUS"]


def test_augment_always_draws_three_numbers(rng):
    lr_patch, hr_patch = sample_patch(nearest_pair(rng), 4, rng)
    reference = np.random.default_rng(5)
    reference.random(3)
    drawn = np.random.default_rng(5)
    augment(lr_patch, hr_patch, drawn)
    assert drawn.random() == reference.random()


class FixedDraws:
    """Stands in for a generator whose next three uniforms are known."""

    def __init__(self, values: list[float]) -> None:
        self.values = np.array(values)

    def random(self, size: int) -> np.ndarray:
        return self.values[:size]


def test_four_rotations_restore_the_patch(rng):
    lr_patch, hr_patch = sample_patch(nearest_pair(rng), 8, rng)
    rotate_only = FixedDraws([0.9, 0.9, 0.1])
    lr_aug, hr_aug = augment(lr_patch, hr_patch, rotate_only)
    np.testing.assert_array_equal(lr_aug, np.rot90(lr_patch, axes=(1, 2)))
    for _ in range(3):
        lr_aug, hr_aug = augment(lr_aug, hr_aug, rotate_only)
    np.testing.assert_array_equal(lr_aug, lr_patch)
    np.testing.assert_array_equal(hr_aug, hr_patch)


def test_each_transform_is_drawn_half_the_time(rng):
    lr_patch = np.arange(4.0).reshape(1, 2, 2)
    hr_patch = np.kron(lr_patch, np.ones((1, 2, 2)))
    outcomes = {}
    for flags in itertools.product((False, True), repeat=3):
        draws = FixedDraws([0.1 if flag else 0.9 for flag in flags])
        outcomes[augment(lr_patch, hr_patch, draws)[0].tobytes()] = flags
    assert len(outcomes) == 8

    counts = np.zeros(3)
    for _ in range(10_000):
        counts += outcomes[augment(lr_patch, hr_patch, rng)[0].tobytes()]
    np.testing.assert_allclose(counts / 10_000, 0.5, atol=0.02)


def test_patch_larger_than_image_is_rejected(rng):
    with pytest.raises(DatasetError, match="smaller"):
        sample_patch(nearest_pair(rng, size=3), 8, rng)


def test_patch_must_be_divisible_by_scale(rng):
    with pytest.raises(DatasetError, match="divisible"):
        sample_patch(nearest_pair(rng, r=3), 8, rng)


def test_normalize_round_trip_and_channel_check(rng):
    data = rng.uniform(0, 255, (2, 3, 4, 4))
    mean = (100.0, 110.0, 120.0)
    normalized = normalize(data, mean)
    np.testing.assert_allclose(normalized[:, 1], data[:, 1] - 110.0)
    np.testing.assert_allclose(denormalize(normalized, mean), data)
    with pytest.raises(ShapeError, match="mean"):
        normalize(data, (1.0, 2.0))


def test_sampler_stream_is_fixed_by_seed(rng):
    dataset = Dataset(pairs=[nearest_pair(rng), nearest_pair(rng)], scale=2)
    mean = (0.0, 0.0, 0.0)
    first = PatchSampler(dataset, 4, 3, mean, seed=11)
    second = PatchSampler(dataset, 4, 3, mean, seed=11)
    other = PatchSampler(dataset, 4, 3, mean, seed=12)
    lr_a, hr_a = first.next_batch()
    lr_b, hr_b = second.next_batch()
    assert lr_a.shape == (3, 3, 2, 2)
    assert hr_a.shape == (3, 3, 4, 4)
    np.testing.assert_array_equal(lr_a, lr_b)
    np.testing.assert_array_equal(hr_a, hr_b)
    assert not np.array_equal(lr_a, other.next_batch()[0])


def test_sampler_state_resumes_the_stream(rng):
    dataset = Dataset(pairs=[nearest_pair(rng)], scale=2)
    sampler = PatchSampler(dataset, 4, 2, (0.0, 0.0, 0.0), seed=3)
    sampler.next_batch()
    state = sampler.state
    expected = sampler.next_batch()

    restored = PatchSampler(dataset, 4, 2, (0.0, 0.0, 0.0), seed=99)
    restored.state = state
    np.testing.assert_array_equal(restored.next_batch()[0], expected[0])


def test_sampler_removes_the_mean(rng):
    pair = ImagePair(
        hr=Image(np.full((3, 8, 8), 50.0)),
        lr=Image(np.full((3, 4, 4), 50.0)),
        scale=2,
        source_id="flat",
    )
    sampler = PatchSampler(Dataset([pair], 2), 4, 1, (10.0, 20.0, 30.0), seed=0)
    lr_batch, hr_batch = sampler.next_batch()
    np.testing.assert_array_equal(lr_batch[0, :, 0, 0], [40.0, 30.0, 20.0])
    np.testing.assert_array_equal(hr_batch[0, :, 0, 0], [40.0, 30.0, 20.0])


def test_sampler_rejects_empty_dataset():
    with pytest.raises(DatasetError, match="empty"):
        PatchSampler(Dataset([], 2), 4, 1, (0.0,), seed=0)
