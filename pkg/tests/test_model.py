from __future__ import annotations

import math

import numpy as np
import pytest

from mlrn.config import MlrnConfig
from mlrn.json_utils import read_json, write_json
from mlrn.model import (
    Model,
    build,
    deep_features,
    forward,
    fsf_block,
    layer_schedule,
    load_checkpoint,
    parameter_count,
    save_checkpoint,
    shallow_features,
    sidecar_path,
    variant_config,
    variant_name,
)
from mlrn.tensor import CheckpointError, ShapeError, Tensor, graph_ops, no_grad

SMALL = MlrnConfig(g=4, n_blocks=1, scale=2)


def test_parameter_count_of_small_network():
    assert parameter_count(SMALL) == 2679
    assert parameter_count(SMALL.model_copy(update={"use_gff": False})) == 2659


def test_parameter_count_matches_built_model():
    config = MlrnConfig(g=3, n_blocks=2, scale=3)
    model = build(config)
    assert sum(t.size for t in model.parameters().values()) == parameter_count(config)


def test_layer_schedule_names_and_kernels():
    names = [layer.name for layer in layer_schedule(SMALL)]
    assert names[:3] == ["coarse", "sf_head.conv[0]", "sf_head.conv[1]"]
    assert names[-4:] == ["up_conv", "sf_tail.conv[0]", "sf_tail.conv[1]", "recon"]
    kernels = {layer.name: layer.kernel for layer in layer_schedule(SMALL)}
    assert kernels["fsf[0].bypass[1].conv[0]"] == 3
    assert kernels["fsf[0].bypass[1].conv[1]"] == 5
    assert kernels["fsf[0].bypass[2].conv[0]"] == 5
    assert "gff" in kernels
    assert "gff" not in {
        layer.name for layer in layer_schedule(variant_config(SMALL, "N_RSC"))
    }


@pytest.mark.parametrize("scale", [2, 3, 4])
def test_forward_upscales_by_the_factor(scale, rng):
    model = build(MlrnConfig(g=2, n_blocks=2, scale=scale))
    lr = Tensor(rng.uniform(-1, 1, (2, 3, 5, 7)))
    with no_grad():
        out = forward(model, lr)
    assert out.shape == (2, 3, 5 * scale, 7 * scale)


def test_forward_rejects_wrong_channel_count():
    model = build(SMALL)
    with pytest.raises(ShapeError, match="channels"):
        forward(model, Tensor(np.zeros((1, 1, 4, 4))))


def test_build_is_seeded_he_uniform():
    first, second = build(SMALL, init_seed=5), build(SMALL, init_seed=5)
    other = build(SMALL, init_seed=6)
    for name, values in first.state_dict().items():
        np.testing.assert_array_equal(values, second.state_dict()[name])
    assert not np.array_equal(
        first.params["coarse"].weight.values, other.params["coarse"].weight.values
    )
    for layer in layer_schedule(SMALL):
        conv = first.params[layer.name]
        bound = math.sqrt(6.0 / (layer.c_in * layer.kernel**2))
        assert np.all(np.abs(conv.weight.values) <= bound)
        np.testing.assert_array_equal(conv.bias.values, 0.0)


def test_variants_and_names():
    assert variant_name(SMALL) == "N_GFF_RSC"
    base = variant_config(SMALL, "N_BASE")
    assert (base.use_gff, base.use_rsc) == (False, False)
    assert variant_name(variant_config(SMALL, "N_GFF")) == "N_GFF"
    assert base.g == SMALL.g


def _silence_fsf_branches(model: Model) -> None:
    for name, conv in model.params.items():
        if ".fuse[" in name:
            conv.weight.values[...] = 0.0
            conv.bias.values[...] = 0.0


# Silent blocks are identities (F_d = F_{d-1}), so the chain output is F0 and
# the skip connection adds F0 once more when GFF is off.
@pytest.mark.parametrize(
    ("variant", "factor"),
    [("N_RSC", 2.0), ("N_BASE", 1.0), ("N_GFF_RSC", 1.0)],
)
def test_residual_paths_with_silent_branches(variant, factor, rng):
    model = build(variant_config(MlrnConfig(g=3, n_blocks=2), variant))
    _silence_fsf_branches(model)
    if model.config.use_gff:
        model.params["gff"].weight.values[...] = 0.0
    lr = Tensor(rng.uniform(-1, 1, (1, 3, 6, 6)))
    with no_grad():
        f0 = shallow_features(model, lr).values
        deep = deep_features(model, lr).values
    np.testing.assert_allclose(deep, factor * f0)


@pytest.mark.parametrize("silent", [True, False])
def test_skip_connection_adds_f0_to_the_block_chain(silent, rng):
    model = build(variant_config(MlrnConfig(g=3, n_blocks=2), "N_RSC"), init_seed=4)
    if silent:
        _silence_fsf_branches(model)
    lr = Tensor(rng.uniform(-1, 1, (1, 3, 6, 6)))
    with no_grad():
        f0 = shallow_features(model, lr)
        chain = f0
        for d in range(model.config.n_blocks):
            chain = fsf_block(model.fsf_params(d), chain)
        deep = deep_features(model, lr).values
    np.testing.assert_allclose(deep - f0.values, chain.values, atol=1e-12)
    if silent:
        np.testing.assert_array_equal(chain.values, f0.values)


def test_missing_parameter_is_rejected():
    params = dict(build(SMALL).params)
    del params["recon"]
    with pytest.raises(ShapeError, match="recon"):
        Model(config=SMALL, params=params)


def test_load_state_dict_copies_in_place():
    source, target = build(SMALL, init_seed=1), build(SMALL, init_seed=2)
    weight = target.params["coarse"].weight
    target.load_state_dict(source.state_dict())
    assert target.params["coarse"].weight is weight
    np.testing.assert_array_equal(weight.values, source.params["coarse"].weight.values)


def test_load_state_dict_rejects_wrong_shapes():
    model = build(SMALL)
    state = model.state_dict()
    state["coarse.bias"] = np.zeros((1, 5, 1, 1))
    with pytest.raises(ShapeError, match="coarse.bias"):
        model.load_state_dict(state)


@pytest.mark.parametrize("variant", ["N_BASE", "N_GFF", "N_RSC", "N_GFF_RSC"])
def test_training_graph_covers_every_operation(variant, rng):
    model = build(variant_config(SMALL, variant))
    out = forward(model, Tensor(rng.uniform(-1, 1, (1, 3, 4, 4))))
    assert graph_ops(out) == {
        "conv2d",
        "relu",
        "concat_channels",
        "add",
        "pixel_shuffle",
    }


def test_checkpoint_reproduces_outputs(tmp_path, rng):
    model = build(SMALL, init_seed=3)
    path = tmp_path / "model.mlrn"
    extra = {"m/coarse.weight": np.ones((4, 3, 3, 3))}
    save_checkpoint(path, model, extra=extra, metadata={"epoch": 7})

    checkpoint = load_checkpoint(path)
    assert checkpoint.model.config == SMALL
    assert checkpoint.model.init_seed == 3
    assert checkpoint.metadata == {"epoch": 7}
    np.testing.assert_array_equal(checkpoint.extra["m/coarse.weight"], 1.0)

    lr = Tensor(rng.uniform(-1, 1, (1, 3, 5, 5)))
    with no_grad():
        np.testing.assert_array_equal(
            forward(checkpoint.model, lr).values, forward(model, lr).values
        )


def test_checkpoint_config_mismatch(tmp_path):
    path = tmp_path / "model.mlrn"
    save_checkpoint(path, build(SMALL))
    sidecar = read_json(sidecar_path(path))
    sidecar["g"] = 8
    write_json(sidecar_path(path), sidecar)
    with pytest.raises(CheckpointError, match="does not match"):
        load_checkpoint(path)


def test_checkpoint_without_sidecar(tmp_path):
    path = tmp_path / "model.mlrn"
    save_checkpoint(path, build(SMALL))
    sidecar_path(path).unlink()
    with pytest.raises(CheckpointError, match="sidecar"):
        load_checkpoint(path)


@pytest.mark.parametrize("scale", [2, 3, 4])
@pytest.mark.parametrize("size", [(8, 8), (13, 31), (48, 9), (48, 48)])
def test_output_is_exactly_scale_times_input(scale, size, rng):
    model = build(MlrnConfig(g=2, n_blocks=1, scale=scale))
    lr = Tensor(rng.uniform(-1, 1, (1, 3, *size)))
    with no_grad():
        out = forward(model, lr)
    assert out.shape == (1, 3, size[0] * scale, size[1] * scale)


def test_forward_is_bit_identical_across_calls(rng):
    model = build(SMALL, init_seed=9)
    lr = Tensor(rng.uniform(-1, 1, (2, 3, 7, 5)))
    with no_grad():
        first = forward(model, lr).values.copy()
    second = forward(model, lr).values
    with no_grad():
        third = forward(model, lr).values
    np.testing.assert_array_equal(first, second)
    np.testing.assert_array_equal(first, third)
