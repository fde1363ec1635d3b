"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mlrn.tensor.ops import (
    ConvParams,
    add,
    concat_channels,
    conv2d,
    l1_loss,
    pixel_shuffle,
    relu,
)
from mlrn.tensor.tensor import FloatArray, ShapeError, Tensor

if TYPE_CHECKING:
    from collections.abc import Callable, Mapping

logger = logging.getLogger(__name__)


def _evaluate(build: Callable[..., Tensor], leaves: Mapping[str, FloatArray]) -> float:
    loss = build(**{name: Tensor(values) for name, values in leaves.items()})
    if loss.size != 1:
        raise ShapeError(f"grad_check builder must return a scalar, got {loss.shape}")
    return loss.item()


def grad_check(
    build: Callable[..., Tensor],
    leaves: Mapping[str, FloatArray],
    epsilon: float = 1e-6,
    floor: float = 1e-12,
) -> dict[str, float]:
    """Compares reverse-mode gradients against central differences.

    `build` is called with one keyword `Tensor` per leaf and must return a
    scalar loss built only from those leaves. Returns, per leaf, the maximum of
    |analytic - numeric| / max(|analytic|, |numeric|, floor).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    tracked = {
        name: Tensor(values, requires_grad=True) for name, values in leaves.items()
    }
    loss = build(**tracked)
    if loss.size != 1:
        raise ShapeError(f"grad_check builder must return a scalar, got {loss.shape}")
    loss.backward()

    errors: dict[str, float] = {}
    for name, base in leaves.items():
        analytic = tracked[name].grad
        if analytic is None:
            analytic = np.zeros_like(base)
        numeric = np.empty_like(base)
        flat_numeric = numeric.reshape(-1)
        for index in range(base.size):
            shifted = dict(leaves)
            plus = base.copy()
            plus.reshape(-1)[index] += epsilon
            minus = base.copy()
            minus.reshape(-1)[index] -= epsilon
            shifted[name] = plus
            f_plus = _evaluate(build, shifted)
            shifted[name] = minus
            f_minus = _evaluate(build, shifted)
            flat_numeric[index] = (f_plus - f_minus) / (2 * epsilon)
        scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
        errors[name] = float(np.max(np.abs(analytic - numeric) / scale))
        logger.debug("grad_check %s: max relative error %.3e", name, errors[name])
    return errors


@dataclass(frozen=True)
class GradCheckCase:
    """A scalar graph over named leaves plus the difference step used to perturb it."""

    build: Callable[..., Tensor]
    leaves: dict[str, FloatArray]
    epsilon: float = 1e-3
    floor: float = 1e-12

    def run(self) -> float:
        errors = grad_check(self.build, self.leaves, self.epsilon, self.floor)
        return max(errors.values())


@dataclass
class GradCheckReport:
    threshold: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def failures(self) -> list[str]:
        return [name for name, err in self.errors.items() if not err < self.threshold]

    @property
    def passed(self) -> bool:
        return not self.failures


def away_from_zero(rng: np.random.Generator, shape: tuple[int, ...]) -> FloatArray:
    """Random values with magnitude in [0.1, 1) and random sign."""
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.1, 1.0, size=shape)


def l1_readout(
    graph: Callable[..., Tensor],
    leaves: Mapping[str, FloatArray],
    rng: np.random.Generator,
) -> Callable[..., Tensor]:
    """Wraps a tensor-valued graph into a scalar L1 loss against a fixed target.

    The target sits 0.5 to 1.0 away from every output element, so small
    perturbations never cross the |.| kink and the upstream gradient has
    mixed signs.
    """
    reference = graph(**{name: Tensor(values) for name, values in leaves.items()})
    offset = rng.choice([-1.0, 1.0], size=reference.shape) * rng.uniform(
        0.5, 1.0, size=reference.shape
    )
    target = Tensor(reference.values + offset)

    def build(**tensors: Tensor) -> Tensor:
        return l1_loss(graph(**tensors), target)

    return build


def _conv_graph(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return conv2d(x, ConvParams.same_size(weight, bias))


def _concat_graph(a: Tensor, b: Tensor) -> Tensor:
    return concat_channels([a, b])


def _shuffle_graph(x: Tensor) -> Tensor:
    return pixel_shuffle(x, 2)


def primitive_cases(rng: np.random.Generator) -> dict[str, GradCheckCase]:
    """One check per primitive; every graph is piecewise linear in each single
    leaf element, so a coarse step keeps round-off small without bias."""
    graphs: dict[str, tuple[Callable[..., Tensor], dict[str, FloatArray]]] = {
        "conv2d": (
            _conv_graph,
            {
                "x": rng.standard_normal((1, 2, 4, 4)),
                "weight": rng.standard_normal((3, 2, 3, 3)),
                "bias": rng.standard_normal((1, 3, 1, 1)),
            },
        ),
        "relu": (relu, {"x": away_from_zero(rng, (2, 3, 4, 4))}),
        "concat": (
            _concat_graph,
            {
                "a": rng.standard_normal((1, 2, 3, 3)),
                "b": rng.standard_normal((1, 3, 3, 3)),
            },
        ),
        "add": (
            add,
            {
                "a": rng.standard_normal((2, 2, 3, 3)),
                "b": rng.standard_normal((2, 2, 3, 3)),
            },
        ),
        "pixel_shuffle": (_shuffle_graph, {"x": rng.standard_normal((1, 8, 3, 3))}),
    }
    cases = {
        name: GradCheckCase(l1_readout(graph, leaves, rng), leaves)
        for name, (graph, leaves) in graphs.items()
    }

    target = Tensor(rng.standard_normal((1, 2, 3, 3)))
    pred = target.values + away_from_zero(rng, target.shape)

    def l1_graph(pred: Tensor) -> Tensor:
        return l1_loss(pred, target)

    cases["l1_loss"] = GradCheckCase(l1_graph, {"pred": pred})
    return cases


def run_checks(cases: Mapping[str, GradCheckCase], threshold: float) -> GradCheckReport:
    report = GradCheckReport(threshold=threshold)
    for name, case in cases.items():
        report.errors[name] = case.run()
        logger.info(
            "gradcheck %-13s max relative error %.3e", name, report.errors[name]
        )
    return report
