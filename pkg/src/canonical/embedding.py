"""
TriMorph v2026 - Embedding Providers
Socket for an image encoder: a deterministic toy projection embedder, or a
file-backed table of precomputed vectors keyed by sample id.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np

from ..assets.image import ImageBuffer
from ..assets.rng import RngStream
from ..assets.tensor_io import read_tensor_dir, write_tensor_dir
from ..condition.vectors import Embedding
from ..errors import DegenerateInputError, EmbeddingLookupError, InvalidInputError

logger = logging.getLogger(__name__)

TOY_GRID = 8
TOY_CHANNELS = 3
CACHE_KIND = "embedding_cache"


def block_downsample(pixels: np.ndarray, grid: int = TOY_GRID) -> np.ndarray:
    """Mean over a grid x grid partition of the image; rows and columns split as evenly as possible."""
    h, w = pixels.shape[:2]
    if h < grid or w < grid:
        raise InvalidInputError(f"Image {w}x{h} is smaller than the {grid}x{grid} embedding grid")
    row_edges = np.linspace(0, h, grid + 1).round().astype(int)
    col_edges = np.linspace(0, w, grid + 1).round().astype(int)
    rows = np.add.reduceat(pixels, row_edges[:-1], axis=0) / np.diff(row_edges)[:, None, None]
    return np.add.reduceat(rows, col_edges[:-1], axis=1) / np.diff(col_edges)[None, :, None]


@dataclass
class ToyEmbedCache:
    shape: tuple[int, ...]
    unit: np.ndarray
    norm: float


@dataclass(frozen=True, eq=False)
class EmbeddingCache:
    """Ordered sample ids and an (N, d_r) embedding matrix."""
    ids: list[str]
    vectors: np.ndarray
    canonicalized: bool = True

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.ids):
            raise InvalidInputError(f"{len(self.ids)} ids but embedding matrix is {vectors.shape}")
        if len(set(self.ids)) != len(self.ids):
            raise InvalidInputError("Embedding ids must be unique")
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def index(self, sample_id: str) -> int:
        try:
            return self.ids.index(sample_id)
        except ValueError as e:
            raise EmbeddingLookupError(f"No embedding for sample {sample_id!r}") from e

    def get(self, sample_id: str) -> Embedding:
        return Embedding(self.vectors[self.index(sample_id)])

    @classmethod
    def from_mapping(cls, mapping: dict[str, np.ndarray], canonicalized: bool = True) -> "EmbeddingCache":
        dims = {np.asarray(v).size for v in mapping.values()}
        if len(dims) > 1:
            raise InvalidInputError(f"Embedding set mixes dimensions {sorted(dims)}")
        ids = list(mapping)
        return cls(ids, np.stack([np.asarray(mapping[i], dtype=np.float64).reshape(-1) for i in ids]), canonicalized)


def save_embedding_cache(directory: Union[str, Path], cache: EmbeddingCache):
    manifest = {"kind": CACHE_KIND, "ids": cache.ids, "dim": cache.dim, "canonicalized": cache.canonicalized}
    write_tensor_dir(directory, {"embeddings": cache.vectors}, manifest)
    logger.info(f"Embedding cache with {len(cache)} entries written to {directory}")


def load_embedding_cache(directory: Union[str, Path]) -> EmbeddingCache:
    tensors, manifest = read_tensor_dir(directory)
    if manifest.get("kind") != CACHE_KIND:
        raise InvalidInputError(f"{directory} is not an embedding cache")
    vectors = tensors["embeddings"].astype(np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != manifest["dim"]:
        raise InvalidInputError(f"Embedding matrix {vectors.shape} disagrees with declared dim {manifest['dim']}")
    return EmbeddingCache(list(manifest["ids"]), vectors, bool(manifest.get("canonicalized", True)))


class EmbeddingProvider:
    """mode 'toy': projection of an 8x8 block mean, L2-normalized; mode 'file': lookup by id."""

    def __init__(
        self,
        mode: Literal["toy", "file"],
        projection: Optional[np.ndarray] = None,
        cache: Optional[EmbeddingCache] = None,
    ):
        if mode == "toy" and projection is None:
            raise InvalidInputError("Toy provider needs a projection matrix")
        if mode == "file" and cache is None:
            raise InvalidInputError("File provider needs an embedding cache")
        if mode not in ("toy", "file"):
            raise InvalidInputError(f"Unknown embedding mode {mode!r}")
        self.mode = mode
        self.projection = projection
        self.cache = cache

    @classmethod
    def toy(cls, seed: int = 0, dim: int = 32) -> "EmbeddingProvider":
        features = TOY_GRID * TOY_GRID * TOY_CHANNELS + 1
        projection, _ = RngStream(seed).derive("toy-embedder").normal((dim, features), 1.0 / np.sqrt(features))
        return cls("toy", projection=projection)

    @classmethod
    def from_file(cls, directory: Union[str, Path]) -> "EmbeddingProvider":
        return cls("file", cache=load_embedding_cache(directory))

    @property
    def dim(self) -> int:
        return self.projection.shape[0] if self.mode == "toy" else self.cache.dim

    def embed_image(self, image: ImageBuffer) -> Embedding:
        if self.mode != "toy":
            raise InvalidInputError("File-backed provider embeds by sample id")
        pooled = block_downsample(image.rgb().astype(np.float64))
        features = np.concatenate([pooled.reshape(-1), [1.0]])
        return Embedding.unit(self.projection @ features)

    def embed_pixels(self, pixels: np.ndarray) -> tuple[np.ndarray, "ToyEmbedCache"]:
        """Differentiable toy embedding of an (H, W, C>=3) float array."""
        if self.mode != "toy":
            raise InvalidInputError("Only the toy embedder is differentiable")
        pixels = np.asarray(pixels, dtype=np.float64)
        pooled = block_downsample(pixels[..., :TOY_CHANNELS])
        raw = self.projection @ np.concatenate([pooled.reshape(-1), [1.0]])
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            raise DegenerateInputError("Toy embedding of this image is the zero vector")
        unit = raw / norm
        return unit, ToyEmbedCache(pixels.shape, unit, norm)

    def embed_backward(self, cache: "ToyEmbedCache", grad_unit: np.ndarray) -> np.ndarray:
        """Pixel gradient of <grad_unit, embed_pixels(x)>."""
        u = cache.unit
        grad_raw = (grad_unit - u * (u @ grad_unit)) / cache.norm
        grad_pooled = (self.projection[:, :-1].T @ grad_raw).reshape(TOY_GRID, TOY_GRID, TOY_CHANNELS)
        h, w = cache.shape[:2]
        rows = np.diff(np.linspace(0, h, TOY_GRID + 1).round().astype(int))
        cols = np.diff(np.linspace(0, w, TOY_GRID + 1).round().astype(int))
        grad_pooled = grad_pooled / np.outer(rows, cols)[:, :, None]
        spread = np.repeat(np.repeat(grad_pooled, rows, axis=0), cols, axis=1)
        grad = np.zeros(cache.shape)
        grad[..., :TOY_CHANNELS] = spread
        return grad


def embed(provider: EmbeddingProvider, item: Union[ImageBuffer, str]) -> Embedding:
    """Toy mode takes an image, file mode takes a sample id."""
    if provider.mode == "toy":
        if not isinstance(item, ImageBuffer):
            raise InvalidInputError("Toy provider needs an image")
        return provider.embed_image(item)
    if not isinstance(item, str):
        raise InvalidInputError("File provider needs a sample id")
    return provider.cache.get(item)


def inject_noise(cache: EmbeddingCache, scale: float, seed: int, noise_dim: Optional[int] = None) -> EmbeddingCache:
    """Append a per-sample unique random unit direction times `scale`."""
    noise_dim = cache.dim if noise_dim is None else noise_dim
    root = RngStream(seed).derive("embedding-noise")
    noise = []
    for sample_id in cache.ids:
        v, _ = root.derive(sample_id).gaussian(noise_dim)
        noise.append(scale * v / np.linalg.norm(v))
    return EmbeddingCache(list(cache.ids), np.concatenate([cache.vectors, np.stack(noise)], axis=1), cache.canonicalized)
