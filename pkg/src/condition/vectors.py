"""
TriMorph v2026 - Conditioning Vectors
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..assets.rng import RngStream
from ..errors import DegenerateInputError, InvalidInputError


def _as_vector(values) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise InvalidInputError(f"Expected a non-empty vector, got shape {array.shape}")
    return array


@dataclass(frozen=True, eq=False)
class LatentVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values))

    @property
    def dim(self) -> int:
        return self.values.size

    @classmethod
    def sample(cls, rng: RngStream, dim: int) -> "LatentVector":
        values, _ = rng.gaussian(dim)
        return cls(values)


@dataclass(frozen=True, eq=False)
class StyleVector:
    values: np.ndarray

    def __post_init__(self):
        values = _as_vector(self.values)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Style vector must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class Embedding:
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = _as_vector(self.values)
        if self.normalized and abs(np.linalg.norm(values) - 1.0) > 1e-5:
            raise InvalidInputError("Embedding flagged normalized but its norm is not 1")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size

    @classmethod
    def unit(cls, values) -> "Embedding":
        values = _as_vector(values)
        norm = np.linalg.norm(values)
        if norm == 0.0:
            raise DegenerateInputError("Cannot normalize a zero embedding")
        return cls(values / norm, normalized=True)


VectorLike = Union[LatentVector, StyleVector, Embedding, np.ndarray]


def as_array(v: VectorLike) -> np.ndarray:
    if isinstance(v, (LatentVector, StyleVector, Embedding)):
        return v.values
    return np.asarray(v, dtype=np.float64)
