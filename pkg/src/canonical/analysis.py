"""
TriMorph v2026 - Embedding Noise Analysis
Compares each image embedding with its main prompt and with a noise prompt
that describes nothing about the face itself.
"""

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DegenerateInputError, InvalidInputError


@dataclass
class ImageSimilarity:
    index: int
    main: float
    noise: float
    flagged: bool
    sample_id: Optional[str] = None


@dataclass
class NoiseReport:
    images: list[ImageSimilarity]
    noise_prompt_mean: list[float]  # mean cosine of each noise prompt against every image
    flagged_count: int

    def to_dict(self) -> dict:
        return {
            "images": [asdict(s) for s in self.images],
            "noise_prompt_mean": self.noise_prompt_mean,
            "flagged_count": self.flagged_count,
        }


def _unit_rows(matrix, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DegenerateInputError(f"Zero-norm vector among {name}")
    return matrix / norms


def noise_analysis(
    image_embeddings,
    main_prompts,
    noise_prompts,
    ids: Optional[Sequence[str]] = None,
) -> NoiseReport:
    """Per-image cos(image, main) and cos(image, noise); image i pairs with prompt row i,
    or with row 0 when a single prompt is given."""
    images = _unit_rows(image_embeddings, "image embeddings")
    main = _unit_rows(main_prompts, "main prompts")
    noise = _unit_rows(noise_prompts, "noise prompts")
    n = len(images)
    if n == 0:
        raise InvalidInputError("Need at least one image embedding")
    if not (images.shape[1] == main.shape[1] == noise.shape[1]):
        raise InvalidInputError("Image and prompt embeddings must share a dimension")
    for name, prompts in (("main", main), ("noise", noise)):
        if len(prompts) not in (1, n):
            raise InvalidInputError(f"Expected 1 or {n} {name} prompts, got {len(prompts)}")
    if ids is not None and len(ids) != n:
        raise InvalidInputError("ids must match the image embeddings")

    main_rows = main if len(main) == n else np.repeat(main, n, axis=0)
    noise_rows = noise if len(noise) == n else np.repeat(noise, n, axis=0)
    cos_main = np.clip(np.sum(images * main_rows, axis=1), -1.0, 1.0)
    cos_noise = np.clip(np.sum(images * noise_rows, axis=1), -1.0, 1.0)

    report = [
        ImageSimilarity(
            i,
            float(cos_main[i]),
            float(cos_noise[i]),
            bool(cos_noise[i] > cos_main[i]),
            None if ids is None else ids[i],
        )
        for i in range(n)
    ]
    dataset_mean = np.clip(noise @ images.T, -1.0, 1.0).mean(axis=1)
    return NoiseReport(report, [float(v) for v in dataset_mean], sum(s.flagged for s in report))
