from mlrn.tensor.gradcheck import (
    GradCheckCase,
    GradCheckReport,
    grad_check,
    primitive_cases,
    run_checks,
)
from mlrn.tensor.ops import (
    ConvParams,
    add,
    concat_channels,
    conv2d,
    l1_loss,
    pixel_shuffle,
    pixel_unshuffle,
    relu,
)
from mlrn.tensor.serialization import CheckpointError, load_tensors, save_tensors
from mlrn.tensor.tensor import (
    ShapeError,
    Tensor,
    backward,
    graph_ops,
    is_grad_enabled,
    no_grad,
)

__all__ = [
    "CheckpointError",
    "ConvParams",
    "GradCheckCase",
    "GradCheckReport",
    "ShapeError",
    "Tensor",
    "add",
    "backward",
    "concat_channels",
    "conv2d",
    "grad_check",
    "graph_ops",
    "is_grad_enabled",
    "l1_loss",
    "load_tensors",
    "no_grad",
    "pixel_shuffle",
    "pixel_unshuffle",
    "primitive_cases",
    "relu",
    "run_checks",
    "save_tensors",
]
