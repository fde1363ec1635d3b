from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from mlrn.tensor import ShapeError

if TYPE_CHECKING:
    from pathlib import Path

    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_IHDR_BIT_DEPTH = 24
_IHDR_COLOR_TYPE = 25
_PALETTE_COLOR_TYPE = 3

U8Array = npt.NDArray[np.uint8]


class ImageIOError(OSError):
    """Raised for unreadable, non-PNG or unsupported-depth image files."""


def quantize(data: FloatArray) -> U8Array:
    """Float samples to 8 bit: round half away from zero, then clamp."""
    rounded = np.sign(data) * np.floor(np.abs(data) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


@dataclass
class Image:
    """Planar (channels, height, width) float64 samples in 0..255 units."""

    data: FloatArray

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[0] not in (1, 3):
            raise ShapeError(
                f"image data must be (1 or 3, h, w), got shape {self.data.shape}"
            )

    @classmethod
    def from_interleaved(cls, pixels: npt.ArrayLike) -> Image:
        """From (h, w) grayscale or (h, w, c) channel-interleaved samples."""
        array = np.asarray(pixels, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        return cls(np.ascontiguousarray(array.transpose(2, 0, 1)))

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def height(self) -> int:
        return int(self.data.shape[1])

    @property
    def width(self) -> int:
        return int(self.data.shape[2])

    def to_uint8(self) -> U8Array:
        """Channel-interleaved (h, w, c) 8-bit samples."""
        return np.ascontiguousarray(quantize(self.data).transpose(1, 2, 0))

    def quantized(self) -> Image:
        return Image(quantize(self.data).astype(np.float64))

    def crop(self, top: int, left: int, height: int, width: int) -> Image:
        return Image(self.data[:, top : top + height, left : left + width].copy())


def _check_png_header(path: Path, header: bytes) -> None:
    if header[: len(PNG_SIGNATURE)] != PNG_SIGNATURE:
        raise ImageIOError(f"{path} is not a PNG file")
    if len(header) <= _IHDR_COLOR_TYPE:
        raise ImageIOError(f"{path} has a truncated PNG header")
    bit_depth = header[_IHDR_BIT_DEPTH]
    if header[_IHDR_COLOR_TYPE] != _PALETTE_COLOR_TYPE and bit_depth != 8:
        raise ImageIOError(f"{path} has unsupported bit depth {bit_depth}")


def load_image(path: Path) -> Image:
    """Reads an 8-bit grayscale or RGB PNG.

    Palette images are expanded to RGB; an alpha channel is dropped with a
    warning.
    """
    try:
        with path.open("rb") as stream:
            _check_png_header(path, stream.read(_IHDR_COLOR_TYPE + 1))
        with PILImage.open(path) as pil_image:
            pil_image.load()
            mode = pil_image.mode
            if mode in ("RGBA", "LA"):
                logger.warning("%s: dropping alpha channel", path)
                pil_image = pil_image.convert(mode[0] if mode == "LA" else "RGB")
            elif mode == "P":
                pil_image = pil_image.convert("RGB")
            elif mode not in ("L", "RGB"):
                raise ImageIOError(f"{path} has unsupported image mode {mode}")
            pixels = np.asarray(pil_image, dtype=np.uint8)
    except ImageIOError:
        raise
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    return Image.from_interleaved(pixels)


def save_image(image: Image, path: Path) -> None:
    pixels = image.to_uint8()
    pil_image = PILImage.fromarray(pixels[:, :, 0] if image.channels == 1 else pixels)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        pil_image.save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
