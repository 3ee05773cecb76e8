"""
TriMorph v2026 - Test Configuration
Shared fixtures for all tests.
"""

import json
import pytest
import tempfile
from pathlib import Path

from src.assets.rng import RngStream
from src.geometry.mesh import icosphere
from src.render.camera import neutral_camera
from src.train.bundles import DiscriminatorBundle, GeneratorBundle
from src.train.config import ModelConfig, SceneConfig, TrainConfig
from src.train.scenes import SceneSampler, build_dataset

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng_golden():
    """Pinned raw/uniform/gaussian sequence for seed 1, stream 0."""
    return json.loads((DATA_DIR / "rng_golden.json").read_text())


@pytest.fixture
def sphere():
    """Subdivision-2 icosphere (320 triangles)."""
    return icosphere(2)


@pytest.fixture
def coarse_sphere():
    return icosphere(1)


@pytest.fixture
def small_model():
    """Generator and discriminator sizes that render 8x8 images quickly."""
    return ModelConfig(
        latent_dim=8,
        style_dim=8,
        mapping_hidden=[16],
        plane_resolution=8,
        plane_channels=4,
        feature_channels=3,
        decoder_hidden=[8],
        embed_dim=6,
        align_width=8,
        align_blocks=1,
        stem_widths=[4, 8],
        condition_dim=8,
    )


@pytest.fixture
def small_scene():
    return SceneConfig(resolution=8, dataset_size=4, subdivisions=1, samples_per_ray=8)


@pytest.fixture
def small_train(small_model, small_scene):
    """Four-step stage-1 run on the small model."""
    return TrainConfig(
        steps=4,
        batch_size=2,
        density_reg_points=16,
        diversity_every=2,
        diversity_samples=2,
        model=small_model,
        scene=small_scene,
    )


@pytest.fixture
def generator(small_model):
    return GeneratorBundle.create(small_model, RngStream(0).derive("init").derive("generator"))


@pytest.fixture
def discriminator(small_model, small_scene):
    return DiscriminatorBundle.create(
        small_model, small_scene.resolution, RngStream(0).derive("init").derive("discriminator")
    )


@pytest.fixture
def camera8():
    """Frontal 8x8 camera on the -z axis."""
    return neutral_camera(8)


@pytest.fixture
def records(small_scene):
    """The four synthetic scenes of the small dataset."""
    return build_dataset(SceneSampler.from_config(small_scene), seed=0)
