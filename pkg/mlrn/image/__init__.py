from mlrn.image.dataset import (
    Dataset,
    DatasetError,
    DatasetSpec,
    ImagePair,
    cached_dataset_mean,
    compute_dataset_mean,
    crop_to_multiple,
    dataset_mean,
    degrade,
    load_dataset,
    png_files,
    split_holdout,
)
from mlrn.image.image import Image, ImageIOError, load_image, quantize, save_image
from mlrn.image.patches import (
    PatchSampler,
    augment,
    denormalize,
    normalize,
    sample_patch,
)
from mlrn.image.resize import BOUNDARIES, Boundary, bicubic_resize, weight_matrix

__all__ = [
    "BOUNDARIES",
    "Boundary",
    "Dataset",
    "DatasetError",
    "DatasetSpec",
    "Image",
    "ImageIOError",
    "ImagePair",
    "PatchSampler",
    "augment",
    "bicubic_resize",
    "cached_dataset_mean",
    "compute_dataset_mean",
    "crop_to_multiple",
    "dataset_mean",
    "degrade",
    "denormalize",
    "load_dataset",
    "load_image",
    "normalize",
    "png_files",
    "quantize",
    "sample_patch",
    "save_image",
    "split_holdout",
    "weight_matrix",
]
