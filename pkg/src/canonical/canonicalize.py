"""
TriMorph v2026 - Canonicalization
Re-renders inverted samples in a frontal camera with canonical geometry and
embeds the result, producing the embedding cache consumed by conditional
training.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..assets.image import ImageBuffer
from ..errors import InvalidInputError
from ..geometry.mesh import TriMesh
from ..geometry.morph import MorphParams, ToyMorphModel, canonical_mesh, canonical_params
from ..geometry.surface_field import SurfaceField
from ..render.camera import Camera, neutral_camera
from ..render.volume import QuadratureSpec
from .embedding import EmbeddingCache, EmbeddingProvider, embed
from .inversion import InversionConfig, invert

logger = logging.getLogger(__name__)

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False


@dataclass(frozen=True, eq=False)
class NeutralFrame:
    """Frontal camera plus canonical morph parameters (and the mesh they produce)."""
    camera: Camera
    morph: MorphParams
    mesh: Optional[TriMesh] = None

    def __post_init__(self):
        eye = self.camera.translation
        axis = self.camera.optical_axis
        # distance from the origin to the optical axis line
        miss = np.linalg.norm(np.cross(axis, -eye))
        if miss > 1e-6 or axis @ -eye <= 0:
            raise InvalidInputError("Neutral camera must look at the scene origin")

    @classmethod
    def for_model(
        cls,
        model: ToyMorphModel,
        resolution: int,
        distance: float = 2.7,
        t_near: float = 1.2,
        t_far: float = 4.2,
    ) -> "NeutralFrame":
        return cls(
            neutral_camera(resolution, distance, t_near, t_far),
            canonical_params(model),
            canonical_mesh(model),
        )

    def surface_field(self) -> Optional[SurfaceField]:
        return None if self.mesh is None else SurfaceField.identity(self.mesh)


def canonical_render(
    g,
    w_x,
    frame: NeutralFrame,
    quad: Optional[QuadratureSpec] = None,
    threads: int = 1,
) -> ImageBuffer:
    """Render w_x under the neutral frame; deformation is the identity in canonical space."""
    return g.render_image(np.asarray(w_x, dtype=np.float64), frame.camera, frame.surface_field(), quad, threads)


@dataclass
class CanonicalizedSample:
    sample_id: str
    residual: float
    converged: bool
    w: np.ndarray
    render: ImageBuffer


def canonicalize_sample(g, record, frame: NeutralFrame, cfg: InversionConfig) -> CanonicalizedSample:
    result = invert(g, record.image, record.camera, record.surface_field(), cfg)
    x_hat = canonical_render(g, result.w, frame, QuadratureSpec(cfg.samples_per_ray))
    return CanonicalizedSample(record.sample_id, result.residual, result.converged, result.w, x_hat)


def canonicalize_dataset(
    g,
    records: Sequence,
    provider: EmbeddingProvider,
    frame: NeutralFrame,
    cfg: Optional[InversionConfig] = None,
    raw: bool = False,
    show_progress: bool = False,
) -> tuple[EmbeddingCache, list[dict]]:
    """Embedding cache over `records`, plus one summary row per sample.

    With raw=True the observed images are embedded directly, skipping
    inversion; pose and expression then leak into the embeddings.
    """
    if provider.mode != "toy":
        raise InvalidInputError("Canonicalization needs an image embedder")
    cfg = cfg or InversionConfig()
    items = list(records)
    iterator = items
    if TQDM_AVAILABLE and show_progress:
        iterator = tqdm(items, desc="Canonicalizing", unit="sample")

    vectors: dict[str, np.ndarray] = {}
    rows: list[dict] = []
    for record in iterator:
        if raw:
            vectors[record.sample_id] = embed(provider, record.image).values
            rows.append({"sample_id": record.sample_id, "raw": True})
            continue
        sample = canonicalize_sample(g, record, frame, cfg)
        vectors[sample.sample_id] = embed(provider, sample.render).values
        rows.append(
            {"sample_id": sample.sample_id, "residual": sample.residual, "converged": sample.converged}
        )

    unconverged = sum(1 for r in rows if r.get("converged") is False)
    if unconverged:
        logger.warning(f"{unconverged} of {len(rows)} inversions ended above tolerance")
    logger.info(f"Canonicalized {len(rows)} samples ({'raw' if raw else 'inverted'})")
    return EmbeddingCache.from_mapping(vectors, canonicalized=not raw), rows
