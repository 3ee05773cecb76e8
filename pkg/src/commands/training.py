"""
TriMorph v2026 - Training Commands
train, collapse-demo and edit.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..assets.image import ImageBuffer, tile_images, write_ppm
from ..assets.rng import RngStream
from ..assets.tensor_io import load_array, write_tensor_dir
from ..canonical.embedding import EmbeddingProvider
from ..errors import DegenerateInputError
from ..render.volume import QuadratureSpec
from ..train.collapse import collapse_demo
from ..train.config import CollapseDemoConfig, TrainConfig
from ..train.editor import edit_objective, toy_edit_direction, train_editor
from ..train.loop import METRICS_FILE, train_loop
from .common import json_ready, load_generator, output_dir, written_files
from .models import EditJob

logger = logging.getLogger(__name__)

EDITOR_KIND = "trimorph_editor"


def run_train(
    cfg: TrainConfig,
    out: Union[str, Path],
    resume: Optional[str] = None,
    show_progress: bool = False,
) -> dict:
    if resume is not None and not Path(resume).exists():
        raise FileNotFoundError(f"Checkpoint not found: {resume}")
    result = train_loop(cfg, out, resume=resume, show_progress=show_progress)
    last = result.metrics[-1] if result.metrics else {}
    return {
        "subcommand": "train",
        "stage": cfg.stage,
        "steps": len(result.metrics),
        "final_metrics": last,
        "checkpoint": str(result.checkpoint),
        "metrics": str(Path(out) / METRICS_FILE),
    }


def run_collapse_demo(cfg: CollapseDemoConfig, out: Union[str, Path], show_progress: bool = False) -> dict:
    out = output_dir(out)
    report = {"subcommand": "collapse-demo", **collapse_demo(cfg, out, show_progress)}
    (out / "collapse_report.json").write_text(json.dumps(json_ready(report), indent=2, sort_keys=True))
    return report


def _edit_grid(g, e_t, alphas, cam, count: int, rng: RngStream) -> list[ImageBuffer]:
    """One row per sample, one column per alpha."""
    z, _ = rng.normal((count, g.cfg.latent_dim))
    w = g.m_g.forward(z)
    shift = e_t.forward(w)
    quad = QuadratureSpec()
    return [ImageBuffer(g.render_style(w[i] + a * shift[i], cam, None, quad).image) for i in range(count) for a in alphas]


def run_edit(job: EditJob, seed: int, out: Union[str, Path], show_progress: bool = False) -> dict:
    """Train an editing network toward an embedding direction and render its strength grid."""
    out = output_dir(out)
    g = load_generator(job.checkpoint, job.model, seed)
    cam = job.camera.build()
    provider = EmbeddingProvider.toy(seed, job.embed_dim)
    if job.direction is not None:
        delta_t = load_array(job.direction).reshape(-1)
    else:
        delta_t = toy_edit_direction(g, provider, cam, job.channel, job.gain)

    result = train_editor(g, provider, delta_t, job.editor, cam, show_progress=show_progress)
    tensors, meta = result.e_t.to_tensors("editor")
    write_tensor_dir(out / "editor", tensors, {"kind": EDITOR_KIND, "editor": meta})

    rng = RngStream(seed).derive("edit")
    alphas = job.editor.alphas
    grid = _edit_grid(g, result.e_t, alphas, cam, job.grid_samples, rng.derive("grid-z"))
    write_ppm(out / "edit_grid.ppm", tile_images(grid, len(alphas)))

    z, _ = rng.derive("eval-z").normal((job.grid_samples, g.cfg.latent_dim))
    w = g.m_g.forward(z)
    cosine: dict[str, Optional[float]] = {}
    for alpha in alphas:
        if alpha <= 0.0:
            continue
        try:
            cosine[f"{alpha:g}"] = 1.0 - edit_objective(g, result.e_t, provider, w, delta_t, alpha, cam)
        except DegenerateInputError:
            cosine[f"{alpha:g}"] = None

    return {
        "subcommand": "edit",
        "steps": len(result.history),
        "skipped": result.skipped,
        "final_loss": result.history[-1] if result.history else None,
        "direction_norm": float(np.linalg.norm(delta_t)),
        "cosine_by_alpha": cosine,
        "files": written_files(out),
    }
