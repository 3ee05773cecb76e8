"""
TriMorph v2026 - Training Configuration
Strict JSON-backed models; unknown keys are rejected.
"""

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from utils.config import get_config

from ..regularize.penalties import RegWeights

_defaults = get_config()


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    @classmethod
    def from_json_file(cls, path: Union[str, Path]):
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


class ModelConfig(StrictModel):
    """Network sizes of the generator and discriminator bundles."""

    latent_dim: int = Field(_defaults.LATENT_DIM, ge=1)
    style_dim: int = Field(_defaults.STYLE_DIM, ge=1)
    mapping_hidden: list[int] = Field(default_factory=lambda: [64, 64])
    plane_resolution: int = Field(_defaults.PLANE_RESOLUTION, ge=2)
    plane_channels: int = Field(_defaults.PLANE_CHANNELS, ge=1)
    feature_channels: int = Field(_defaults.FEATURE_CHANNELS, ge=1)
    decoder_hidden: list[int] = Field(default_factory=lambda: [_defaults.DECODER_HIDDEN])
    synthesis_gain: float = Field(0.5, gt=0.0)
    half_extent: float = Field(_defaults.SCENE_HALF_EXTENT, gt=0.0)
    embed_dim: int = Field(_defaults.EMBED_DIM, ge=1)
    align_width: int = Field(_defaults.ALIGN_WIDTH, ge=1)
    align_blocks: int = Field(_defaults.ALIGN_BLOCKS, ge=1)
    stem_widths: list[int] = Field(default_factory=lambda: [16, 32, 64])
    condition_dim: int = Field(
        _defaults.CONDITION_DIM, ge=1, description="Shared size of stem features u and condition v"
    )


class SceneConfig(StrictModel):
    """Synthetic dataset standing in for real photographs plus fitted head meshes."""

    resolution: int = Field(_defaults.IMAGE_RESOLUTION, ge=8)
    dataset_size: int = Field(64, ge=1)
    model_seed: int = 0
    subdivisions: int = Field(2, ge=0, le=4)
    azimuth_range: tuple[float, float] = (-0.5, 0.5)
    elevation_range: tuple[float, float] = (-0.25, 0.25)
    camera_distance: float = Field(_defaults.NEUTRAL_CAMERA_DISTANCE, gt=0.0)
    t_near: float = Field(_defaults.T_NEAR, gt=0.0)
    t_far: float = Field(_defaults.T_FAR, gt=0.0)
    morph_scale: float = Field(1.0, ge=0.0, description="Std of beta/theta/psi draws")
    jaw_scale: float = Field(0.08, ge=0.0)
    appearance_count: int = Field(0, ge=0, description="0 gives every sample its own appearance")
    blob_radius: float = Field(0.12, gt=0.0)
    blob_density: float = Field(8.0, gt=0.0)
    flip_probability: float = Field(0.5, ge=0.0, le=1.0)
    samples_per_ray: int = Field(_defaults.SAMPLES_PER_RAY, ge=2)


class TrainConfig(StrictModel):
    stage: Literal[1, 2] = 1
    seed: int = 0
    steps: int = Field(200, ge=0)
    batch_size: int = Field(4, ge=1)
    learning_rate: float = Field(_defaults.LEARNING_RATE, gt=0.0)
    reg: RegWeights = Field(default_factory=RegWeights)
    r1_weight: float = Field(_defaults.R1_WEIGHT, ge=0.0)
    density_reg_weight: float = Field(0.25, ge=0.0)
    density_reg_points: int = Field(256, ge=0)
    density_reg_delta: float = Field(0.02, gt=0.0)
    checkpoint_every: int = Field(0, ge=0, description="0 writes only the final checkpoint")
    diversity_every: int = Field(50, ge=0)
    diversity_samples: int = Field(4, ge=2)
    sensitivity_every: int = Field(0, ge=0)
    sensitivity_probes: int = Field(8, ge=1)
    monitor_generator_norm_every: int = Field(0, ge=0)
    stage1_checkpoint: Optional[str] = None
    embedding_cache: Optional[str] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)


class EditorConfig(StrictModel):
    """Editing-network training with the generator frozen."""

    steps: int = Field(100, ge=0)
    batch_size: int = Field(4, ge=1)
    learning_rate: float = Field(_defaults.LEARNING_RATE, gt=0.0)
    eta: float = Field(10.0, ge=0.0)
    seed: int = 0
    alphas: list[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])


class CollapseDemoConfig(StrictModel):
    """Paired conditional runs with unique per-sample embedding noise, with and without the sensitivity penalty."""

    seed: int = 0
    steps: int = Field(2000, ge=0)
    stage1_steps: int = Field(100, ge=0, description="Unconditional warm-up shared by both runs")
    lambdas: tuple[float, float] = (0.0, 0.01)
    batch_size: int = Field(2, ge=1)
    learning_rate: float = Field(_defaults.LEARNING_RATE, gt=0.0)
    noise_scale: float = Field(0.5, ge=0.0)
    noise_dim: int = Field(16, ge=1)
    diversity_every: int = Field(100, ge=1)
    diversity_samples: int = Field(4, ge=2)
    grid_samples: int = Field(4, ge=1)
    budget_seconds: float = Field(900.0, gt=0.0)
    density_reg_points: int = Field(64, ge=0)
    reg: RegWeights = Field(default_factory=RegWeights)
    model: ModelConfig = Field(default_factory=lambda: ModelConfig(plane_resolution=16))
    scene: SceneConfig = Field(
        default_factory=lambda: SceneConfig(
            dataset_size=8, morph_scale=0.0, jaw_scale=0.0, samples_per_ray=12
        )
    )

    def train_config(self, stage: int, lambda_jac: float) -> TrainConfig:
        return TrainConfig(
            stage=stage,
            seed=self.seed,
            steps=self.steps if stage == 2 else self.stage1_steps,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            reg=self.reg.model_copy(update={"lambda_jac": lambda_jac}),
            density_reg_points=self.density_reg_points,
            diversity_every=self.diversity_every,
            diversity_samples=self.diversity_samples,
            model=self.model,
            scene=self.scene,
        )
