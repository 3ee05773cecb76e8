"""
TriMorph v2026 - Canonicalization Commands
invert, canonize and embed-analyze.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..assets.image import ImageBuffer, psnr, tile_images, write_ppm
from ..assets.rng import RngStream
from ..assets.tensor_io import load_array, save_array
from ..canonical.analysis import noise_analysis
from ..canonical.canonicalize import NeutralFrame, canonicalize_dataset
from ..canonical.embedding import EmbeddingProvider, inject_noise, load_embedding_cache, save_embedding_cache
from ..canonical.inversion import invert
from ..render.volume import QuadratureSpec
from ..train.scenes import SceneSampler, build_dataset
from .common import load_generator, output_dir, written_files
from .models import CanonizeJob, InvertJob

logger = logging.getLogger(__name__)

EMBEDDINGS_DIR = "embeddings"


def run_invert(job: InvertJob, seed: int, out: Union[str, Path], show_progress: bool = False) -> dict:
    """Invert job.target, or a render of a random style seen through target_camera."""
    out = output_dir(out)
    g = load_generator(job.checkpoint, job.model, seed)
    cam = job.camera.build()
    quad = QuadratureSpec(job.inversion.samples_per_ray)

    if job.target is not None:
        target = ImageBuffer(load_array(job.target))
    else:
        z, _ = RngStream(seed).derive("invert").derive("target-z").normal(g.cfg.latent_dim)
        target_cam = (job.target_camera or job.camera).build()
        target = g.render_image(g.style(z), target_cam, None, quad)

    result = invert(g, target, cam, None, job.inversion)
    fitted = g.render_image(result.w, cam, None, quad)
    write_ppm(out / "inversion.ppm", tile_images([target, fitted], 2))
    save_array(out / "w.ntc", result.w)

    report = {
        "subcommand": "invert",
        "synthetic_target": job.target is None,
        "psnr": psnr(fitted, target),
        **result.to_dict(),
    }
    report["files"] = written_files(out)
    return report


def run_canonize(job: CanonizeJob, seed: int, out: Union[str, Path], show_progress: bool = False) -> dict:
    """Embedding cache for the dataset drawn from `seed`; stage 2 must use the same seed and scene."""
    out = output_dir(out)
    g = load_generator(job.checkpoint, job.model, seed)
    sampler = SceneSampler.from_config(job.scene)
    records = build_dataset(sampler, seed, show_progress)
    if job.limit is not None:
        records = records[: job.limit]

    scene = job.scene
    frame = NeutralFrame.for_model(sampler.model, scene.resolution, scene.camera_distance, scene.t_near, scene.t_far)
    provider = EmbeddingProvider.toy(seed, job.embed_dim)
    cache, rows = canonicalize_dataset(g, records, provider, frame, job.inversion, job.raw, show_progress)
    if job.noise_scale > 0.0:
        cache = inject_noise(cache, job.noise_scale, seed, job.noise_dim)

    save_embedding_cache(out / EMBEDDINGS_DIR, cache)
    residuals = [row["residual"] for row in rows if "residual" in row]
    return {
        "subcommand": "canonize",
        "samples": len(cache),
        "dim": cache.dim,
        "canonicalized": cache.canonicalized,
        "mean_residual": float(np.mean(residuals)) if residuals else None,
        "unconverged": sum(1 for row in rows if row.get("converged") is False),
        "cache": str(out / EMBEDDINGS_DIR),
    }


def _embedding_rows(path: Union[str, Path]) -> tuple[np.ndarray, Optional[list[str]]]:
    """An NTC1 matrix, or an embedding cache directory (which also carries ids)."""
    path = Path(path)
    if path.is_dir():
        cache = load_embedding_cache(path)
        return cache.vectors, list(cache.ids)
    return np.atleast_2d(load_array(path)), None


def run_embed_analyze(images: str, main: str, noise: str, out: Optional[Union[str, Path]] = None) -> dict:
    """Cosine of each image embedding against its main and noise prompts."""
    image_rows, ids = _embedding_rows(images)
    main_rows, _ = _embedding_rows(main)
    noise_rows, _ = _embedding_rows(noise)
    report = noise_analysis(image_rows, main_rows, noise_rows, ids)
    result = {"subcommand": "embed-analyze", **report.to_dict()}
    if out is not None:
        path = output_dir(out) / "analysis.json"
        path.write_text(json.dumps(result, indent=2, sort_keys=True))
        logger.info(f"Analysis written to {path}")
    return result
