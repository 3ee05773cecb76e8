"""
TriMorph v2026 - Conditioning Operations
Latent mapping, embedding-aligned styles, projection-style scoring and edits.
"""

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from ..assets.image import ImageBuffer
from ..errors import InvalidInputError
from ..field.network import DenseNet
from .alignment import AlignmentNet
from .vectors import Embedding, LatentVector, StyleVector, VectorLike, as_array


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Stem feature u and camera condition v of one image."""
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if np.shape(self.u) != np.shape(self.v):
            raise InvalidInputError(f"u {np.shape(self.u)} and v {np.shape(self.v)} must match")


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")


def map_latent(m_g: DenseNet, z: LatentVector) -> StyleVector:
    values = as_array(z)
    if values.size != m_g.in_dim:
        raise InvalidInputError(f"Mapping net expects {m_g.in_dim}-d latents, got {values.size}")
    return StyleVector(m_g.forward(values))


def align_style(w: StyleVector, r: Embedding, alpha: float, t_g: AlignmentNet) -> StyleVector:
    """w + alpha * T_G(w, r); alpha = 0 returns w untouched."""
    _check_alpha(alpha)
    values = as_array(w)
    if alpha == 0.0:
        return StyleVector(values.copy())
    return StyleVector(values + alpha * t_g.forward(values, as_array(r)))


def align_styles(w: np.ndarray, r: np.ndarray, alphas: np.ndarray, t_g: AlignmentNet) -> np.ndarray:
    """Batched align_style; rows with alpha 0 are copied bit-exactly."""
    alphas = np.asarray(alphas, dtype=np.float64).reshape(-1)
    if np.any((alphas < 0) | (alphas > 1)):
        raise InvalidInputError("alpha must lie in [0, 1]")
    out = np.array(w, dtype=np.float64, copy=True)
    active = alphas > 0
    if active.any():
        out[active] = w[active] + alphas[active, None] * t_g.forward(w[active], r[active])
    return out


def edit_style(w: StyleVector, e_t: AlignmentNet, alpha: float) -> StyleVector:
    """w + alpha * E_t(w)."""
    _check_alpha(alpha)
    values = as_array(w)
    if alpha == 0.0:
        return StyleVector(values.copy())
    return StyleVector(values + alpha * e_t.forward(values))


def discriminate(u: VectorLike, v: VectorLike, r: Embedding, alpha: float, t_d: AlignmentNet) -> float:
    """u . (v + alpha * T_D(v, r))"""
    _check_alpha(alpha)
    u, v = as_array(u), as_array(v)
    if u.size != v.size:
        raise InvalidInputError(f"Stem feature ({u.size}) and condition ({v.size}) dims differ")
    v_r = v if alpha == 0.0 else v + alpha * t_d.forward(v, as_array(r))
    return float(u @ v_r)


def discriminate_batch(u: np.ndarray, v: np.ndarray, r: np.ndarray, alphas, t_d: AlignmentNet) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise InvalidInputError(f"Stem features {u.shape} and conditions {v.shape} differ")
    v_r = align_styles(v, np.asarray(r, dtype=np.float64), alphas, t_d)
    return np.sum(u * v_r, axis=1)


class RendersConditioned(Protocol):
    def render_conditioned(self, z: np.ndarray, r: np.ndarray, alpha: float, cam, sf) -> ImageBuffer: ...


def alpha_sweep(
    g: RendersConditioned,
    z: LatentVector,
    r: Embedding,
    alphas: Sequence[float],
    cam,
    sf: Optional[object] = None,
) -> list[ImageBuffer]:
    """One render per alpha, moving from the unconditional sample toward the embedding."""
    for alpha in alphas:
        _check_alpha(alpha)
    return [g.render_conditioned(as_array(z), as_array(r), float(a), cam, sf) for a in alphas]
