from mlrn.model.checkpoint import (
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
    sidecar_path,
)
from mlrn.model.checks import (
    DEFAULT_THRESHOLD,
    TINY_CONFIG,
    gradcheck_suite,
    tiny_model_gradcheck_case,
)
from mlrn.model.network import (
    VARIANT_FLAGS,
    FsfParams,
    LayerSpec,
    Model,
    build,
    coarse_extract,
    deep_features,
    forward,
    fsf_block,
    layer_schedule,
    parameter_count,
    sf_block,
    shallow_features,
    variant_config,
    variant_name,
)

__all__ = [
    "DEFAULT_THRESHOLD",
    "TINY_CONFIG",
    "VARIANT_FLAGS",
    "Checkpoint",
    "FsfParams",
    "LayerSpec",
    "Model",
    "build",
    "coarse_extract",
    "deep_features",
    "forward",
    "fsf_block",
    "gradcheck_suite",
    "layer_schedule",
    "load_checkpoint",
    "parameter_count",
    "save_checkpoint",
    "sf_block",
    "shallow_features",
    "sidecar_path",
    "tiny_model_gradcheck_case",
    "variant_config",
    "variant_name",
]
