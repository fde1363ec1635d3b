"""Multi-level feature fusion network for single-image super-resolution.

Pipeline: coarse 3x3 extraction, a shallow feature block, a chain of feature
skip fusion blocks, optional global feature fusion, optional residual skip
connection, a one-shot sub-pixel upscaler, a tail shallow feature block and a
3x3 reconstruction conv.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mlrn.config import MlrnConfig, VariantName
from mlrn.tensor import (
    ConvParams,
    ShapeError,
    Tensor,
    add,
    concat_channels,
    conv2d,
    pixel_shuffle,
    relu,
)

if TYPE_CHECKING:
    from collections.abc import Mapping

    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

BYPASS_KERNELS: tuple[tuple[int, int], ...] = ((3, 3), (3, 5), (5, 5))
"""Kernel sizes of the two convs in each of the three bypass extractors."""

VARIANT_FLAGS: dict[VariantName, tuple[bool, bool]] = {
    "N_BASE": (False, False),
    "N_GFF": (True, False),
    "N_RSC": (False, True),
    "N_GFF_RSC": (True, True),
}


@dataclass(frozen=True)
class LayerSpec:
    name: str
    c_out: int
    c_in: int
    kernel: int

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return self.c_out, self.c_in, self.kernel, self.kernel

    @property
    def count(self) -> int:
        return self.c_out * self.c_in * self.kernel * self.kernel + self.c_out


def sf_names(prefix: str) -> tuple[str, str]:
    return f"{prefix}.conv[0]", f"{prefix}.conv[1]"


def bypass_name(block: int, bypass: int, conv: int) -> str:
    return f"fsf[{block}].bypass[{bypass}].conv[{conv}]"


def fuse_name(block: int, bypass: int) -> str:
    return f"fsf[{block}].fuse[{bypass}]"


def layer_schedule(config: MlrnConfig) -> list[LayerSpec]:
    """Every conv layer of the network in forward order."""
    g, c = config.g, config.in_channels
    layers = [LayerSpec("coarse", g, c, 3)]
    layers += [LayerSpec(name, g, g, 1) for name in sf_names("sf_head")]
    for d in range(config.n_blocks):
        for k, kernels in enumerate(BYPASS_KERNELS):
            layers += [
                LayerSpec(bypass_name(d, k, j), g, g, size)
                for j, size in enumerate(kernels)
            ]
            layers.append(LayerSpec(fuse_name(d, k), g, 2 * g, 1))
    if config.use_gff:
        layers.append(LayerSpec("gff", g, config.n_blocks * g, 1))
    layers.append(LayerSpec("up_conv", g * config.scale**2, g, 3))
    layers += [LayerSpec(name, g, g, 1) for name in sf_names("sf_tail")]
    layers.append(LayerSpec("recon", c, g, 3))
    return layers


def parameter_count(config: MlrnConfig) -> int:
    return sum(layer.count for layer in layer_schedule(config))


def variant_name(config: MlrnConfig) -> VariantName:
    flags = (config.use_gff, config.use_rsc)
    return next(name for name, value in VARIANT_FLAGS.items() if value == flags)


def variant_config(base: MlrnConfig, name: VariantName) -> MlrnConfig:
    use_gff, use_rsc = VARIANT_FLAGS[name]
    return base.model_copy(update={"use_gff": use_gff, "use_rsc": use_rsc})


@dataclass(frozen=True)
class FsfParams:
    bypasses: tuple[tuple[ConvParams, ConvParams], ...]
    fuses: tuple[ConvParams, ...]


@dataclass
class Model:
    """Named conv parameters of one network plus the config they were built for."""

    config: MlrnConfig
    params: dict[str, ConvParams]
    init_seed: int = 0

    def __post_init__(self) -> None:
        expected = {layer.name: layer for layer in layer_schedule(self.config)}
        if set(self.params) != set(expected):
            missing = sorted(set(expected) - set(self.params))
            unknown = sorted(set(self.params) - set(expected))
            raise ShapeError(
                f"parameters do not match the config: missing {missing}, "
                f"unknown {unknown}"
            )
        for name, layer in expected.items():
            if self.params[name].weight.shape != layer.weight_shape:
                raise ShapeError(
                    f"{name} weight has shape {self.params[name].weight.shape}, "
                    f"expected {layer.weight_shape}"
                )

    @classmethod
    def from_tensors(
        cls,
        config: MlrnConfig,
        tensors: Mapping[str, Tensor],
        init_seed: int = 0,
    ) -> Model:
        """Assembles a model from flat `<layer>.weight` / `<layer>.bias` tensors."""
        params = {}
        for layer in layer_schedule(config):
            try:
                weight = tensors[f"{layer.name}.weight"]
                bias = tensors[f"{layer.name}.bias"]
            except KeyError as exc:
                missing = exc.args[0]
                raise ShapeError(f"no tensor {missing!r} for {layer.name}") from exc
            params[layer.name] = ConvParams.same_size(weight, bias)
        return cls(config=config, params=params, init_seed=init_seed)

    def parameters(self) -> dict[str, Tensor]:
        """Flat view keyed `<layer>.weight` / `<layer>.bias`, in forward order."""
        flat: dict[str, Tensor] = {}
        for layer in layer_schedule(self.config):
            conv = self.params[layer.name]
            flat[f"{layer.name}.weight"] = conv.weight
            flat[f"{layer.name}.bias"] = conv.bias
        return flat

    def state_dict(self) -> dict[str, FloatArray]:
        return {name: t.values.copy() for name, t in self.parameters().items()}

    def load_state_dict(self, state: Mapping[str, FloatArray]) -> None:
        for name, tensor in self.parameters().items():
            if name not in state:
                raise ShapeError(f"state has no entry for {name}")
            if state[name].shape != tensor.values.shape:
                raise ShapeError(
                    f"{name}: state shape {state[name].shape} does not match "
                    f"{tensor.values.shape}"
                )
            tensor.values[...] = state[name]

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def sf_params(self, prefix: str) -> tuple[ConvParams, ConvParams]:
        first, second = sf_names(prefix)
        return self.params[first], self.params[second]

    def fsf_params(self, block: int) -> FsfParams:
        return FsfParams(
            bypasses=tuple(
                (
                    self.params[bypass_name(block, k, 0)],
                    self.params[bypass_name(block, k, 1)],
                )
                for k in range(len(BYPASS_KERNELS))
            ),
            fuses=tuple(
                self.params[fuse_name(block, k)] for k in range(len(BYPASS_KERNELS))
            ),
        )


def build(config: MlrnConfig, init_seed: int = 0) -> Model:
    """Creates a model with He-uniform weights and zero biases.

    Weights are drawn from U(-b, b) with b = sqrt(6 / fan_in), layer by layer in
    forward order from one generator seeded with `init_seed`.
    """
    if config.scale not in (2, 3, 4):
        raise ValueError(f"scale must be 2, 3 or 4, got {config.scale}")
    rng = np.random.default_rng(init_seed)
    params = {}
    for layer in layer_schedule(config):
        bound = math.sqrt(6.0 / (layer.c_in * layer.kernel**2))
        weight = rng.uniform(-bound, bound, size=layer.weight_shape)
        params[layer.name] = ConvParams.same_size(
            Tensor(weight, requires_grad=True),
            Tensor.zeros((1, layer.c_out, 1, 1), requires_grad=True),
        )
    model = Model(config=config, params=params, init_seed=init_seed)
    logger.debug(
        "Built %s model with %d parameters (seed %d)",
        variant_name(config),
        parameter_count(config),
        init_seed,
    )
    return model


def coarse_extract(model: Model, lr: Tensor) -> Tensor:
    if lr.shape[1] != model.config.in_channels:
        raise ShapeError(
            f"input has {lr.shape[1]} channels, model expects "
            f"{model.config.in_channels}"
        )
    return conv2d(lr, model.params["coarse"])


def sf_block(params: tuple[ConvParams, ConvParams], x: Tensor) -> Tensor:
    """x + conv1x1(relu(conv1x1(x)))"""
    first, second = params
    return add(x, conv2d(relu(conv2d(x, first)), second))


def fsf_block(params: FsfParams, f_prev: Tensor) -> Tensor:
    """Three bypass stages, each fused with the running feature, plus a residual.

    Bypass k extracts from `f_prev` with its own kernel pair, is concatenated in
    front of the running feature (`f_prev` for the first stage) and fused back
    to G channels by a 1x1 conv.
    """
    running = f_prev
    for (first, second), fuse in zip(params.bypasses, params.fuses, strict=True):
        extracted = conv2d(relu(conv2d(f_prev, first)), second)
        running = conv2d(concat_channels([extracted, running]), fuse)
    return add(running, f_prev)


def shallow_features(model: Model, lr: Tensor) -> Tensor:
    return sf_block(model.sf_params("sf_head"), coarse_extract(model, lr))


def deep_features(model: Model, lr: Tensor) -> Tensor:
    """The tensor entering the upscaler."""
    f0 = shallow_features(model, lr)
    block_outputs = []
    feature = f0
    for d in range(model.config.n_blocks):
        feature = fsf_block(model.fsf_params(d), feature)
        block_outputs.append(feature)

    if model.config.use_gff:
        fused = conv2d(concat_channels(block_outputs), model.params["gff"])
    else:
        fused = block_outputs[-1]
    if model.config.use_rsc:
        fused = add(fused, f0)
    return fused


def forward(model: Model, lr: Tensor) -> Tensor:
    """Maps (n, C, h, w) low-resolution input to (n, C, r*h, r*w)."""
    upscaled = pixel_shuffle(
        conv2d(deep_features(model, lr), model.params["up_conv"]), model.config.scale
    )
    corrected = sf_block(model.sf_params("sf_tail"), upscaled)
    return conv2d(corrected, model.params["recon"])
