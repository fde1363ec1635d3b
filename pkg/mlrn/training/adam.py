from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mlrn.tensor import ShapeError

if TYPE_CHECKING:
    from collections.abc import Mapping

    from mlrn.tensor import Tensor
    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First and second moments per parameter name, plus the step counter."""

    m: dict[str, FloatArray] = field(default_factory=dict)
    v: dict[str, FloatArray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, Tensor]) -> AdamState:
        return cls(
            m={name: np.zeros_like(p.values) for name, p in params.items()},
            v={name: np.zeros_like(p.values) for name, p in params.items()},
        )

    def tensors(self) -> dict[str, FloatArray]:
        """Flat `m/<name>` and `v/<name>` view for checkpoint containers."""
        flat = {f"m/{name}": values for name, values in self.m.items()}
        flat.update({f"v/{name}": values for name, values in self.v.items()})
        return flat

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, FloatArray], t: int) -> AdamState:
        state = cls(t=t)
        for key, values in tensors.items():
            kind, _, name = key.partition("/")
            if kind == "m":
                state.m[name] = values.copy()
            elif kind == "v":
                state.v[name] = values.copy()
        return state


def adam_step(  # noqa: PLR0913
    params: Mapping[str, Tensor],
    grads: Mapping[str, FloatArray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place on the parameter values."""
    for name, param in params.items():
        if name not in grads:
            raise ShapeError(f"no gradient for parameter {name}")
        if grads[name].shape != param.values.shape:
            raise ShapeError(
                f"{name}: gradient shape {grads[name].shape} does not match "
                f"{param.values.shape}"
            )
        if name not in state.m or state.m[name].shape != param.values.shape:
            raise ShapeError(f"optimizer state does not match parameter {name}")

    state.t += 1
    bias1 = 1.0 - beta1**state.t
    bias2 = 1.0 - beta2**state.t
    for name, param in params.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        param.values -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)


class Adam:
    """Adam over a fixed set of named parameters."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = dict(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like(self.params)

    def step(self, lr: float) -> None:
        """Updates every parameter from its `grad`; a missing grad counts as zero."""
        grads = {
            name: p.grad if p.grad is not None else np.zeros_like(p.values)
            for name, p in self.params.items()
        }
        adam_step(
            self.params, grads, self.state, lr, self.beta1, self.beta2, self.eps
        )

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
