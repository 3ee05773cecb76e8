"""
TriMorph v2026 - Distribution Collapse Demo
Two conditional runs from the same unconditional start, fed embeddings that
carry a unique random direction per sample: one without the embedding
sensitivity penalty, one with it. Reports diversity curves and their ratio.
"""

import logging
import math
import time
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..assets.image import ImageBuffer, tile_images, write_ppm
from ..assets.rng import RngStream
from ..canonical.embedding import EmbeddingCache, EmbeddingProvider, embed, inject_noise
from .bundles import DiscriminatorBundle, GeneratorBundle
from .config import CollapseDemoConfig
from .loop import Trainer, fresh_alignment
from .scenes import SceneSampler, build_dataset

logger = logging.getLogger(__name__)


def noisy_embeddings(records, cfg: CollapseDemoConfig) -> EmbeddingCache:
    provider = EmbeddingProvider.toy(cfg.seed, cfg.model.embed_dim)
    clean = EmbeddingCache.from_mapping({r.sample_id: embed(provider, r.image).values for r in records})
    return inject_noise(clean, cfg.noise_scale, cfg.seed, cfg.noise_dim)


def _sample_grid(trainer: Trainer, count: int) -> list[ImageBuffer]:
    z, _ = trainer.rng.derive("eval").derive("diversity-z").normal((count, trainer.g.cfg.latent_dim))
    r = trainer.eval_embedding()
    w = trainer.g.m_g.forward(z)
    w = w + trainer.g.t_g.forward(w, np.broadcast_to(r, (count, r.size)))
    return [ImageBuffer(trainer.g.render_style(wi, trainer.eval_camera, None, trainer.eval_quad).image) for wi in w]


def _ratio(regularized: float, unregularized: float) -> float:
    if unregularized == 0.0:
        return 1.0 if regularized == 0.0 else math.inf
    return regularized / unregularized


def collapse_demo(cfg: CollapseDemoConfig, out_dir: Optional[Union[str, Path]] = None, show_progress: bool = False) -> dict:
    """Run both arms and return the report; grids go to out_dir when given.

    Both arms stop at the same step once the wall-clock budget is spent, and
    the report is flagged partial.
    """
    started = time.monotonic()
    records = build_dataset(SceneSampler.from_config(cfg.scene), cfg.seed, show_progress)
    init = RngStream(cfg.seed).derive("init")
    g0 = GeneratorBundle.create(cfg.model, init.derive("generator"))
    d0 = DiscriminatorBundle.create(cfg.model, cfg.scene.resolution, init.derive("discriminator"))
    if cfg.stage1_steps:
        warmup = Trainer(g0, d0, records, cfg.train_config(1, 0.0))
        warmup.run(cfg.stage1_steps, show_progress=show_progress)
        logger.info(f"Unconditional warm-up finished after {cfg.stage1_steps} steps")

    cache = noisy_embeddings(records, cfg)
    r = np.stack([cache.get(rec.sample_id).values for rec in records])

    trainers = []
    for lam in cfg.lambdas:
        g, d = g0.copy(), d0.copy()
        fresh_alignment(g, d, cache.dim, init)
        trainers.append(Trainer(g, d, records, cfg.train_config(2, lam), r))

    curves: list[list[tuple[int, float]]] = [[(0, t.diversity())] for t in trainers]
    partial = False
    done = 0
    for step in range(cfg.steps):
        if time.monotonic() - started > cfg.budget_seconds:
            partial = True
            logger.warning(f"Collapse demo budget of {cfg.budget_seconds}s exhausted at step {step}")
            break
        for trainer, curve in zip(trainers, curves):
            trainer.step(step)
            done_here = step + 1
            if done_here % cfg.diversity_every == 0 or done_here == cfg.steps:
                curve.append((done_here, trainer.diversity()))
        done = step + 1
        if show_progress and done % max(cfg.diversity_every, 1) == 0:
            logger.info(f"Collapse demo step {done}/{cfg.steps}")

    for trainer, curve in zip(trainers, curves):
        if curve[-1][0] != done:
            curve.append((done, trainer.diversity()))

    finals = [curve[-1][1] for curve in curves]
    report = {
        "lambdas": list(cfg.lambdas),
        "steps_completed": done,
        "partial": partial,
        "curves": {str(lam): [[s, v] for s, v in curve] for lam, curve in zip(cfg.lambdas, curves)},
        "final_diversity": {str(lam): v for lam, v in zip(cfg.lambdas, finals)},
        "ratio": _ratio(finals[1], finals[0]),
    }

    if out_dir is not None:
        out_dir = Path(out_dir)
        grids = [_sample_grid(t, cfg.grid_samples) for t in trainers]
        for lam, images in zip(cfg.lambdas, grids):
            write_ppm(out_dir / f"samples_lambda_{lam:g}.ppm", tile_images(images, len(images)))
        write_ppm(out_dir / "collapse_grid.ppm", tile_images(grids[0] + grids[1], cfg.grid_samples))
        report["grids"] = sorted(p.name for p in out_dir.glob("*.ppm"))

    logger.info(f"Collapse demo: diversity {finals[0]:.4f} -> {finals[1]:.4f}, ratio {report['ratio']:.3f}")
    return report
