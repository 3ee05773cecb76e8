"""
TriMorph v2026 - Image Buffers
Float images with unbounded internal values; quantization only at PPM export.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major float32 pixels stored as (height, width, channels)."""
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float32)
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        if pixels.ndim != 3 or min(pixels.shape) <= 0:
            raise InvalidInputError(f"Image must be (H, W, C), got {pixels.shape}")
        object.__setattr__(self, "pixels", np.ascontiguousarray(pixels))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def filled(cls, width: int, height: int, channels: int, value: float) -> "ImageBuffer":
        return cls(np.full((height, width, channels), value, dtype=np.float32))

    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def flipped_horizontal(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels[:, ::-1, :])

    def rgb(self) -> np.ndarray:
        """First three channels; fewer channels are replicated or zero-padded."""
        if self.channels >= 3:
            return self.pixels[:, :, :3]
        if self.channels == 1:
            return np.repeat(self.pixels, 3, axis=2)
        pad = np.zeros((self.height, self.width, 3 - self.channels), dtype=np.float32)
        return np.concatenate([self.pixels, pad], axis=2)

    def to_ppm_bytes(self) -> bytes:
        # round(255 * clamp(p, 0, 1)), ties away from zero
        scaled = np.clip(self.rgb().astype(np.float64), 0.0, 1.0) * 255.0
        quantized = np.floor(scaled + 0.5).astype(np.uint8)
        header = f"P6\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + quantized.tobytes()


def write_ppm(path: Union[str, Path], img: ImageBuffer):
    """Binary P6 export; byte-deterministic for a given buffer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(img.to_ppm_bytes())


def tile_images(images: Sequence[ImageBuffer], columns: int, gap_value: float = 0.0) -> ImageBuffer:
    """Grid of equally sized images, row-major, one pixel gap."""
    if not images:
        raise InvalidInputError("Nothing to tile")
    h, w = images[0].height, images[0].width
    c = max(img.channels for img in images)
    if any(img.height != h or img.width != w for img in images):
        raise InvalidInputError("All tiles must share a resolution")
    columns = max(1, min(columns, len(images)))
    rows = math.ceil(len(images) / columns)
    grid = np.full((rows * (h + 1) - 1, columns * (w + 1) - 1, c), gap_value, dtype=np.float32)
    for k, img in enumerate(images):
        r, col = divmod(k, columns)
        grid[r * (h + 1):r * (h + 1) + h, col * (w + 1):col * (w + 1) + w, :img.channels] = img.pixels
    return ImageBuffer(grid)


def psnr(a: ImageBuffer, b: ImageBuffer, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over all channels; +inf for identical images."""
    if a.pixels.shape != b.pixels.shape:
        raise InvalidInputError(f"Shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    mse = float(np.mean((a.pixels.astype(np.float64) - b.pixels.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
