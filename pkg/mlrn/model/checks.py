from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from mlrn.config import MlrnConfig
from mlrn.model.network import Model, build, forward, layer_schedule
from mlrn.tensor import GradCheckCase, GradCheckReport, primitive_cases, run_checks
from mlrn.tensor.gradcheck import l1_readout

if TYPE_CHECKING:
    from mlrn.tensor.tensor import FloatArray, Tensor

logger = logging.getLogger(__name__)

TINY_CONFIG = MlrnConfig(g=2, n_blocks=1, scale=2)
DEFAULT_THRESHOLD = 1e-4


def _feeds_relu(layer_name: str) -> bool:
    return layer_name.endswith(".conv[0]")


def tiny_model_gradcheck_case(
    rng: np.random.Generator, config: MlrnConfig = TINY_CONFIG
) -> GradCheckCase:
    """End-to-end check of every parameter and the input of a small network.

    Convs that feed a ReLU get per-channel biases of alternating sign and
    magnitude 2 on top of down-scaled weights, which keeps every pre-activation
    far from the kink. The loss is then linear around each perturbed value and
    the central difference is exact up to round-off.
    """
    model = build(config, init_seed=int(rng.integers(2**31)))
    leaves: dict[str, FloatArray] = {}
    for layer in layer_schedule(config):
        conv = model.params[layer.name]
        leaves[f"{layer.name}.weight"] = 0.1 * conv.weight.values
        if _feeds_relu(layer.name):
            signs = np.where(np.arange(layer.c_out) % 2 == 0, 2.0, -2.0)
            leaves[f"{layer.name}.bias"] = signs.reshape(1, -1, 1, 1)
        else:
            leaves[f"{layer.name}.bias"] = rng.uniform(
                -0.1, 0.1, (1, layer.c_out, 1, 1)
            )
    leaves["lr"] = rng.uniform(-1.0, 1.0, (1, config.in_channels, 8, 8))

    def graph(**tensors: Tensor) -> Tensor:
        lr = tensors.pop("lr")
        return forward(Model.from_tensors(config, tensors), lr)

    return GradCheckCase(l1_readout(graph, leaves, rng), leaves)


def gradcheck_suite(
    threshold: float = DEFAULT_THRESHOLD, seed: int = 0
) -> GradCheckReport:
    """Runs the primitive checks and the end-to-end network check."""
    rng = np.random.default_rng(seed)
    cases = primitive_cases(rng)
    cases["end_to_end"] = tiny_model_gradcheck_case(rng)
    report = run_checks(cases, threshold)
    if report.passed:
        logger.info("All %d gradient checks below %.1e", len(cases), threshold)
    else:
        logger.warning("Gradient checks above %.1e: %s", threshold, report.failures)
    return report
