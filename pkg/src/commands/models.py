"""
TriMorph v2026 - Command Models (Pydantic schemas)
JSON job files for every subcommand; unknown keys are rejected.
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import Field, field_validator

from utils.config import get_config

from ..assets.rng import RngStream
from ..canonical.inversion import InversionConfig
from ..render.camera import Camera
from ..render.volume import QuadratureSpec
from ..train.config import EditorConfig, ModelConfig, SceneConfig, StrictModel

_defaults = get_config()

SUBCOMMANDS = (
    "render",
    "deform",
    "estimate-jnorm",
    "invert",
    "canonize",
    "train",
    "collapse-demo",
    "embed-analyze",
    "edit",
)


class CameraConfig(StrictModel):
    """Pinhole camera; without axis_angle the camera looks at the origin from `translation`."""
    width: int = Field(_defaults.IMAGE_RESOLUTION, ge=1)
    height: int = Field(_defaults.IMAGE_RESOLUTION, ge=1)
    focal: Optional[float] = Field(None, gt=0.0, description="Pixels; defaults to the image width")
    axis_angle: Optional[list[float]] = Field(None, description="Camera-to-world rotation as a rotation vector")
    translation: list[float] = Field(
        default_factory=lambda: [0.0, 0.0, -_defaults.NEUTRAL_CAMERA_DISTANCE], description="Eye position"
    )
    t_near: float = Field(_defaults.T_NEAR, gt=0.0)
    t_far: float = Field(_defaults.T_FAR, gt=0.0)

    @field_validator("axis_angle", "translation")
    @classmethod
    def _three_vector(cls, v):
        if v is not None and (len(v) != 3 or not all(math.isfinite(x) for x in v)):
            raise ValueError("expected 3 finite numbers")
        return v

    def build(self) -> Camera:
        focal = float(self.width if self.focal is None else self.focal)
        if self.axis_angle is None:
            return Camera.look_at(
                self.translation, np.zeros(3), self.width, self.height, focal, self.t_near, self.t_far
            )
        return Camera.from_axis_angle(
            self.axis_angle, self.translation, self.width, self.height, focal, self.t_near, self.t_far
        )


class QuadratureConfig(StrictModel):
    n_samples: int = Field(_defaults.SAMPLES_PER_RAY, ge=2)
    stratified: bool = False
    jitter_seed: Optional[int] = Field(None, description="Defaults to the command-line seed")

    def build(self, seed: int) -> QuadratureSpec:
        jitter = RngStream(seed if self.jitter_seed is None else self.jitter_seed).derive("jitter")
        return QuadratureSpec(self.n_samples, self.stratified, jitter)


class RenderJob(StrictModel):
    """Render one generated sample, optionally deformed and swept over alpha."""
    checkpoint: Optional[str] = Field(None, description="Checkpoint directory; a fresh generator otherwise")
    model: ModelConfig = Field(default_factory=ModelConfig)
    camera: CameraConfig = Field(default_factory=CameraConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    observation_mesh: Optional[str] = Field(None, description="OBJ of the observed geometry")
    canonical_mesh: Optional[str] = Field(None, description="OBJ of the canonical geometry")
    embedding: Optional[str] = Field(None, description="NTC1 vector for the alpha sweep")
    alphas: list[float] = Field(default_factory=list)

    @field_validator("alphas")
    @classmethod
    def _unit_interval(cls, v):
        if any(not 0.0 <= a <= 1.0 for a in v):
            raise ValueError("alphas must lie in [0, 1]")
        return v


class InvertJob(StrictModel):
    """Invert a target image; without a target, invert a render of a random style."""
    checkpoint: Optional[str] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    camera: CameraConfig = Field(default_factory=CameraConfig)
    target: Optional[str] = Field(None, description="NTC1 image tensor (H, W, C)")
    target_camera: Optional[CameraConfig] = Field(None, description="Camera for the synthetic target")
    inversion: InversionConfig = Field(default_factory=InversionConfig)


class CanonizeJob(StrictModel):
    """Build the embedding cache for conditional training."""
    checkpoint: Optional[str] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    inversion: InversionConfig = Field(default_factory=lambda: InversionConfig(max_steps=100))
    embed_dim: int = Field(32, ge=1)
    raw: bool = Field(False, description="Embed observed images without canonicalization")
    noise_scale: float = Field(0.0, ge=0.0, description="Append unique per-sample noise of this norm")
    noise_dim: int = Field(16, ge=1)
    limit: Optional[int] = Field(None, ge=1, description="Only the first N scenes")


class EditJob(StrictModel):
    checkpoint: Optional[str] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    camera: CameraConfig = Field(default_factory=CameraConfig)
    editor: EditorConfig = Field(default_factory=EditorConfig)
    direction: Optional[str] = Field(None, description="NTC1 embedding delta; a channel boost otherwise")
    channel: int = Field(0, ge=0, le=2)
    gain: float = Field(1.5, gt=0.0)
    embed_dim: int = Field(32, ge=1)
    grid_samples: int = Field(3, ge=1)


class CliConfig(StrictModel):
    """Resolved command line."""
    subcommand: Literal[SUBCOMMANDS]  # type: ignore[valid-type]
    config: Optional[str] = None
    seed: int = 0
    out: str = "out"
    threads: int = Field(1, ge=1)
    verbose: bool = False
