"""
TriMorph v2026 - Training Loop
Two-stage schedule: an unconditional stage, then a conditional stage that
starts from the first stage's checkpoint with fresh zero-output alignment
networks. Writes checkpoints and a JSON-lines metrics log.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..assets.rng import RngStream
from ..assets.tensor_io import read_tensor_dir, write_tensor_dir
from ..canonical.embedding import EmbeddingCache, load_embedding_cache
from ..condition.alignment import AlignmentNet
from ..errors import ConfigurationError, InvalidInputError, NumericFailure
from ..regularize.jacobian import ProbeSpec
from ..render.camera import neutral_camera
from ..render.volume import QuadratureSpec
from .bundles import DiscriminatorBundle, GeneratorBundle
from .config import TrainConfig
from .diagnostics import diversity, generator_image_fn, generator_style_norm, sensitivity_ratio
from .scenes import SceneRecord, SceneSampler, build_dataset
from .steps import GanOptimizers, TrainBatch, gan_step

logger = logging.getLogger(__name__)

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False

CHECKPOINT_KIND = "trimorph_checkpoint"
METRICS_FILE = "metrics.jsonl"


def save_bundles(directory: Union[str, Path], g: GeneratorBundle, d: DiscriminatorBundle, **info):
    g_tensors, g_meta = g.to_tensors()
    d_tensors, d_meta = d.to_tensors()
    manifest = {"kind": CHECKPOINT_KIND, "generator": g_meta, "discriminator": d_meta, **info}
    write_tensor_dir(directory, {**g_tensors, **d_tensors}, manifest)
    logger.info(f"Checkpoint written to {directory}")


def load_bundles(directory: Union[str, Path]) -> tuple[GeneratorBundle, DiscriminatorBundle, dict]:
    tensors, manifest = read_tensor_dir(directory)
    if manifest.get("kind") != CHECKPOINT_KIND:
        raise InvalidInputError(f"{directory} is not a TriMorph checkpoint")
    g = GeneratorBundle.from_tensors(tensors, manifest["generator"])
    d = DiscriminatorBundle.from_tensors(g.cfg, tensors, manifest["discriminator"])
    return g, d, manifest


def fresh_alignment(g: GeneratorBundle, d: DiscriminatorBundle, cond_dim: int, rng: RngStream):
    """Replace T_G and T_D with zero-output nets sized for `cond_dim`-d embeddings."""
    cfg = g.cfg
    g.t_g = AlignmentNet.create(cfg.style_dim, cond_dim, rng.derive("align-g"), cfg.align_width, cfg.align_blocks)
    d.t_d = AlignmentNet.create(
        cfg.condition_dim, cond_dim, rng.derive("align-d"), cfg.align_width, cfg.align_blocks
    )


def embedding_matrix(cache: EmbeddingCache, records: Sequence[SceneRecord]) -> np.ndarray:
    return np.stack([cache.get(r.sample_id).values for r in records])


@dataclass
class Trainer:
    """Owns the bundles, optimizers and real data of one training run."""
    g: GeneratorBundle
    d: DiscriminatorBundle
    records: list[SceneRecord]
    cfg: TrainConfig
    embeddings: Optional[np.ndarray] = None  # rows aligned with records
    history: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.records:
            raise InvalidInputError("Training needs at least one record")
        if self.embeddings is not None and len(self.embeddings) != len(self.records):
            raise InvalidInputError("Need exactly one embedding per record")
        self.rng = RngStream(self.cfg.seed).derive("train")
        self.optimizers = GanOptimizers(self.g, self.d, self.cfg.learning_rate)
        scene = self.cfg.scene
        self.eval_camera = neutral_camera(scene.resolution, scene.camera_distance, scene.t_near, scene.t_far)
        self.eval_quad = QuadratureSpec(scene.samples_per_ray)

    @property
    def conditional(self) -> bool:
        return self.embeddings is not None

    def batch(self, step: int) -> TrainBatch:
        raw, _ = self.rng.derive("batch", step).raw(self.cfg.batch_size)
        indices = (raw % np.uint64(len(self.records))).astype(np.int64)
        chosen = [self.records[i] for i in indices]
        r = None if self.embeddings is None else self.embeddings[indices]
        return TrainBatch.from_records(chosen, r)

    def eval_embedding(self) -> Optional[np.ndarray]:
        return None if self.embeddings is None else self.embeddings[0]

    def diversity(self) -> float:
        return diversity(
            self.g,
            self.eval_embedding(),
            self.cfg.diversity_samples,
            self.eval_camera,
            None,
            self.rng.derive("eval"),
            quad=self.eval_quad,
        )

    def diagnostics(self, step: int) -> dict:
        out: dict = {}
        cfg = self.cfg
        if cfg.diversity_every and step % cfg.diversity_every == 0:
            out["diversity"] = self.diversity()
        if self.conditional and cfg.sensitivity_every and step % cfg.sensitivity_every == 0:
            z, _ = self.rng.derive("eval").derive("sensitivity-z").normal(cfg.model.latent_dim)
            probes = ProbeSpec(cfg.reg.probe_sigma, cfg.sensitivity_probes, self.rng.derive("sensitivity", step))
            fn = generator_image_fn(self.g, self.eval_camera, None, 1.0, self.eval_quad)
            out["sensitivity_ratio"] = sensitivity_ratio(fn, z, self.eval_embedding(), probes)
        if cfg.monitor_generator_norm_every and step % cfg.monitor_generator_norm_every == 0:
            w = self.g.mean_style(self.rng.derive("eval"))
            out["generator_style_norm"] = generator_style_norm(self.g, w, self.eval_camera)
        return out

    def step(self, step: int, lr: Optional[float] = None) -> dict:
        metrics = gan_step(self.g, self.d, self.batch(step), self.cfg, self.rng, step, self.optimizers, lr)
        metrics.update(self.diagnostics(step + 1))
        self.history.append(metrics)
        return metrics

    def run(
        self,
        steps: int,
        start: int = 0,
        on_step: Optional[Callable[[int, dict], bool]] = None,
        show_progress: bool = False,
    ) -> int:
        """Run steps [start, steps); on_step returning False stops early. Returns steps completed."""
        indices = range(start, steps)
        if TQDM_AVAILABLE and show_progress:
            indices = tqdm(indices, desc=f"Stage {self.cfg.stage}", unit="step")
        completed = start
        for step in indices:
            metrics = self.step(step)
            completed = step + 1
            if on_step is not None and on_step(completed, metrics) is False:
                break
        return completed


@dataclass
class TrainResult:
    g: GeneratorBundle
    d: DiscriminatorBundle
    metrics: list[dict]
    checkpoint: Optional[Path]


def _json_safe(value):
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_metrics_line(path: Path, metrics: dict):
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps({k: _json_safe(v) for k, v in metrics.items()}, sort_keys=True) + "\n")


def prepare_run(
    cfg: TrainConfig,
    records: Optional[list[SceneRecord]] = None,
    show_progress: bool = False,
) -> Trainer:
    """Build or load the bundles for cfg.stage and wrap them in a Trainer."""
    if records is None:
        records = build_dataset(SceneSampler.from_config(cfg.scene), cfg.seed, show_progress)
    init = RngStream(cfg.seed).derive("init")

    if cfg.stage == 1:
        g = GeneratorBundle.create(cfg.model, init.derive("generator"))
        d = DiscriminatorBundle.create(cfg.model, cfg.scene.resolution, init.derive("discriminator"))
        return Trainer(g, d, records, cfg)

    if not cfg.stage1_checkpoint or not Path(cfg.stage1_checkpoint).exists():
        raise ConfigurationError("Stage 2 needs an existing stage1_checkpoint")
    if not cfg.embedding_cache or not Path(cfg.embedding_cache).exists():
        raise ConfigurationError("Stage 2 needs an existing embedding_cache")
    g, d, _ = load_bundles(cfg.stage1_checkpoint)
    cache = load_embedding_cache(cfg.embedding_cache)
    fresh_alignment(g, d, cache.dim, init)
    logger.info(f"Stage 2 from {cfg.stage1_checkpoint} with {cache.dim}-d embeddings")
    return Trainer(g, d, records, cfg, embedding_matrix(cache, records))


def train_loop(
    cfg: TrainConfig,
    out_dir: Union[str, Path],
    records: Optional[list[SceneRecord]] = None,
    resume: Optional[Union[str, Path]] = None,
    show_progress: bool = False,
) -> TrainResult:
    """Train for cfg.steps, checkpointing every cfg.checkpoint_every steps and at the end.

    A resumed run restores the bundle weights and step counter; optimizer
    moments restart from zero.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer = prepare_run(cfg, records, show_progress)
    start = 0
    if resume is not None:
        trainer.g, trainer.d, manifest = load_bundles(resume)
        trainer.optimizers = GanOptimizers(trainer.g, trainer.d, cfg.learning_rate)
        start = int(manifest.get("step", 0))
        logger.info(f"Resuming from {resume} at step {start}")

    metrics_path = out_dir / METRICS_FILE
    if start == 0:
        metrics_path.write_text("")
        write_metrics_line(metrics_path, {"step": 0, **trainer.diagnostics(0)})
    ckpt_dir = out_dir / "checkpoints"

    def on_step(done: int, metrics: dict) -> bool:
        write_metrics_line(metrics_path, metrics)
        if cfg.checkpoint_every and done % cfg.checkpoint_every == 0 and done < cfg.steps:
            save_bundles(ckpt_dir / f"step_{done:06d}", trainer.g, trainer.d, stage=cfg.stage, step=done)
        return True

    logger.info(f"Stage {cfg.stage}: {cfg.steps} steps, batch {cfg.batch_size}, lr {cfg.learning_rate}")
    try:
        done = trainer.run(cfg.steps, start, on_step, show_progress)
    except NumericFailure as e:
        dump = out_dir / "failure.json"
        dump.write_text(json.dumps({"error": str(e), **e.diagnostics}, indent=2, default=str))
        logger.error(f"Training aborted: {e}; diagnostics in {dump}")
        raise

    final = ckpt_dir / "final"
    save_bundles(final, trainer.g, trainer.d, stage=cfg.stage, step=done)
    return TrainResult(trainer.g, trainer.d, trainer.history, final)
