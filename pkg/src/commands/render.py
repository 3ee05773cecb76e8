"""
TriMorph v2026 - Render and Deform Commands
Render a generated sample (feature, depth, optional alpha sweep) and deform
point sets through a mesh pair.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..assets.image import tile_images, write_ppm
from ..assets.mesh_io import read_obj
from ..assets.rng import RngStream
from ..assets.tensor_io import load_array, save_array
from ..condition.conditioning import alpha_sweep
from ..errors import InvalidInputError
from ..geometry.surface_field import SurfaceField
from ..render.volume import render_image
from .common import load_generator, output_dir, written_files
from .models import RenderJob

logger = logging.getLogger(__name__)


def surface_field_from_files(observation: Optional[str], canonical: Optional[str]) -> Optional[SurfaceField]:
    if observation is None and canonical is None:
        return None
    if observation is None or canonical is None:
        raise InvalidInputError("A surface field needs both the observation and the canonical mesh")
    return SurfaceField(read_obj(observation), read_obj(canonical))


def run_render(job: RenderJob, seed: int, out: Union[str, Path], threads: int = 1) -> dict:
    """Render the sample drawn from `seed`; writes features.ppm, features.ntc and depth.ntc."""
    out = output_dir(out)
    g = load_generator(job.checkpoint, job.model, seed)
    cam = job.camera.build()
    quad = job.quadrature.build(seed)
    sf = surface_field_from_files(job.observation_mesh, job.canonical_mesh)

    z, _ = RngStream(seed).derive("render").derive("z").normal(g.cfg.latent_dim)
    features, depth = render_image(g.planes(g.style(z)), g.decoder, sf, cam, quad, threads)
    write_ppm(out / "features.ppm", features)
    save_array(out / "features.ntc", features.pixels)
    save_array(out / "depth.ntc", depth.pixels)

    report = {
        "subcommand": "render",
        "width": cam.width,
        "height": cam.height,
        "deformed": sf is not None,
        "feature_mean": float(np.mean(features.pixels)),
        "depth_range": [float(np.min(depth.pixels)), float(np.max(depth.pixels))],
    }

    if job.alphas:
        if job.embedding is None:
            raise InvalidInputError("An alpha sweep needs an embedding file")
        r = load_array(job.embedding).reshape(-1)
        images = alpha_sweep(g, z, r, job.alphas, cam, sf)
        write_ppm(out / "alpha_sweep.ppm", tile_images(images, len(images)))
        report["alphas"] = list(job.alphas)

    report["files"] = written_files(out)
    logger.info(f"Rendered {cam.width}x{cam.height} sample to {out}")
    return report


def run_deform(observation: str, canonical: str, points: str, out: Union[str, Path]) -> dict:
    """Map every point of an (N, 3) tensor through the mesh pair; writes points.ntc."""
    out = output_dir(out)
    sf = SurfaceField(read_obj(observation), read_obj(canonical))
    x = load_array(points)
    if x.shape[-1] != 3:
        raise InvalidInputError(f"Points tensor must end in 3 coordinates, got shape {x.shape}")
    moved = sf.deform_points(x.reshape(-1, 3)).reshape(x.shape)
    save_array(out / "points.ntc", moved)
    displacement = np.linalg.norm(moved - x, axis=-1) if x.size else np.zeros(0)
    logger.info(f"Deformed {x.size // 3} points")
    return {
        "subcommand": "deform",
        "points": int(x.size // 3),
        "identity": sf.is_identity,
        "max_displacement": float(displacement.max()) if displacement.size else 0.0,
        "files": written_files(out),
    }
