"""
TriMorph v2026 - Synthetic Scenes
Ground-truth volumes of Gaussian density blobs anchored at the vertices of a
morphed head mesh, rendered under random orbit cameras.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..assets.image import ImageBuffer
from ..assets.rng import RngStream
from ..geometry.mesh import TriMesh
from ..geometry.morph import MorphParams, ToyMorphModel, build_toy_morph_model, canonical_mesh, morph
from ..geometry.surface_field import SurfaceField
from ..render.camera import Camera, make_rays, orbit_camera
from ..render.raster import mirror_mesh_coords, render_mesh_coords
from ..render.volume import QuadratureSpec, march
from .config import SceneConfig

logger = logging.getLogger(__name__)

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False


@dataclass(frozen=True, eq=False)
class BlobVolume:
    """Sum of isotropic Gaussians; color is the density-weighted blend of blob colors."""
    centers: np.ndarray  # (K, 3)
    colors: np.ndarray  # (K, 3)
    radius: float
    amplitude: float

    def query(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, None]:
        d2 = np.sum((points[:, None, :] - self.centers[None, :, :]) ** 2, axis=2)
        g = np.exp(-d2 / (2.0 * self.radius**2))
        total = g.sum(axis=1)
        colors = (g @ self.colors) / np.maximum(total, 1e-12)[:, None]
        return colors, self.amplitude * total, None

    def mirrored(self) -> "BlobVolume":
        return BlobVolume(self.centers * np.array([-1.0, 1.0, 1.0]), self.colors, self.radius, self.amplitude)


def render_volume(volume: BlobVolume, cam: Camera, n_samples: int) -> ImageBuffer:
    rays = make_rays(cam)
    result, _ = march(rays, cam, QuadratureSpec(n_samples), volume.query)
    return ImageBuffer(result.features.reshape(cam.height, cam.width, -1))


@dataclass(frozen=True, eq=False)
class SceneRecord:
    sample_id: str
    image: ImageBuffer
    camera: Camera
    morph: MorphParams
    rdr: ImageBuffer
    observation: TriMesh
    canonical: TriMesh
    flipped: bool

    def surface_field(self) -> SurfaceField:
        return SurfaceField(self.observation, self.canonical)


class SceneSampler:
    """Draws (image, camera, morph params, rdr) records from a toy morph model."""

    def __init__(self, model: ToyMorphModel, cfg: SceneConfig):
        self.model = model
        self.cfg = cfg
        self.canonical = canonical_mesh(model)
        unit = model.template.vertices / np.linalg.norm(model.template.vertices, axis=1, keepdims=True)
        x, y, z = unit[:, 0], unit[:, 1], unit[:, 2]
        self._color_features = np.stack([np.ones_like(x), x, y, z, x * y, y * z, x * z, y * y], axis=1)

    @classmethod
    def from_config(cls, cfg: SceneConfig) -> "SceneSampler":
        model = build_toy_morph_model(
            seed=cfg.model_seed, subdivisions=cfg.subdivisions, jaw_scale=cfg.jaw_scale
        )
        return cls(model, cfg)

    def appearance(self, appearance_seed: int) -> np.ndarray:
        """Per-vertex colors, a smooth function of the vertex direction."""
        coeffs, _ = RngStream(appearance_seed).derive("appearance").normal((self._color_features.shape[1], 3))
        return 0.5 + 0.4 * np.tanh(self._color_features @ coeffs)

    def volume(self, mesh: TriMesh, appearance_seed: int) -> BlobVolume:
        return BlobVolume(
            mesh.vertices.copy(),
            self.appearance(appearance_seed),
            self.cfg.blob_radius,
            self.cfg.blob_density,
        )

    def draw_params(self, rng: RngStream) -> MorphParams:
        scale = self.cfg.morph_scale
        beta, _ = rng.derive("beta").normal(self.model.shape_dim, scale)
        theta, _ = rng.derive("theta").normal(self.model.pose_dim, scale)
        psi, _ = rng.derive("psi").normal(self.model.expr_dim, scale)
        return MorphParams(beta, theta, psi)

    def draw_camera(self, rng: RngStream) -> Camera:
        u, _ = rng.derive("camera").uniform(2)
        lo_a, hi_a = self.cfg.azimuth_range
        lo_e, hi_e = self.cfg.elevation_range
        return orbit_camera(
            lo_a + (hi_a - lo_a) * u[0],
            lo_e + (hi_e - lo_e) * u[1],
            self.cfg.camera_distance,
            self.cfg.resolution,
            self.cfg.resolution,
            t_near=self.cfg.t_near,
            t_far=self.cfg.t_far,
        )

    def appearance_seed(self, rng: RngStream, index: int) -> int:
        if self.cfg.appearance_count == 0:
            return int(rng.derive("appearance-seed").raw(1)[0][0])
        u, _ = rng.derive("appearance-seed").uniform(1)
        return int(u[0] * self.cfg.appearance_count)


def sample_scene(sampler: SceneSampler, rng: RngStream, index: int = 0, flip: Optional[bool] = None) -> SceneRecord:
    """One record; deterministic given the stream. `flip` overrides the coin toss."""
    params = sampler.draw_params(rng)
    mesh = morph(sampler.model, params)
    cam = sampler.draw_camera(rng)
    volume = sampler.volume(mesh, sampler.appearance_seed(rng, index))
    image = render_volume(volume, cam, sampler.cfg.samples_per_ray)
    rdr = render_mesh_coords(mesh, cam)
    canonical = sampler.canonical

    if flip is None:
        coin, _ = rng.derive("flip").uniform(1)
        flip = bool(coin[0] < sampler.cfg.flip_probability)
    if flip:
        image = image.flipped_horizontal()
        rdr = mirror_mesh_coords(rdr)
        cam = cam.mirrored()
        mesh = mesh.mirrored_x()
        canonical = canonical.mirrored_x()

    return SceneRecord(f"scene-{index:05d}", image, cam, params, rdr, mesh, canonical, flip)


def build_dataset(sampler: SceneSampler, seed: int, show_progress: bool = False) -> list[SceneRecord]:
    root = RngStream(seed).derive("dataset")
    indices = range(sampler.cfg.dataset_size)
    if TQDM_AVAILABLE and show_progress:
        indices = tqdm(indices, desc="Scenes", unit="scene")
    records = [sample_scene(sampler, root.derive("scene", i), i) for i in indices]
    logger.info(f"Built {len(records)} synthetic scenes at {sampler.cfg.resolution}px")
    return records
