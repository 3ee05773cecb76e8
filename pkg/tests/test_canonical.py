"""
Tests for embedding providers, latent inversion, canonicalization and noise analysis.
"""

import numpy as np
import pytest

from src.assets.image import ImageBuffer
from src.assets.rng import RngStream
from src.canonical.analysis import noise_analysis
from src.canonical.canonicalize import NeutralFrame, canonical_render, canonicalize_dataset
from src.canonical.embedding import (
    EmbeddingCache,
    EmbeddingProvider,
    block_downsample,
    embed,
    inject_noise,
    load_embedding_cache,
    save_embedding_cache,
)
from src.canonical.inversion import InversionConfig, PixelGradientDistance, _loss_and_grad, invert
from src.commands.canonical import run_invert
from src.commands.models import InvertJob
from src.errors import DegenerateInputError, EmbeddingLookupError, InvalidInputError
from src.geometry.morph import canonical_params
from src.render.camera import Camera
from src.render.volume import QuadratureSpec
from src.train.scenes import SceneSampler


@pytest.fixture
def provider():
    return EmbeddingProvider.toy(seed=0, dim=6)



class TestEmbeddingProvider:
    """Tests for the toy embedder and the file-backed table."""

    def test_block_downsample_means(self):
        pixels = np.arange(16 * 16 * 3, dtype=np.float64).reshape(16, 16, 3)
        pooled = block_downsample(pixels)
        assert pooled.shape == (8, 8, 3)
        np.testing.assert_allclose(pooled[0, 0], pixels[:2, :2].mean(axis=(0, 1)))

    def test_image_too_small(self):
        with pytest.raises(InvalidInputError):
            block_downsample(np.zeros((4, 4, 3)))

    def test_toy_embedding_is_unit_and_deterministic(self, provider):
        image = ImageBuffer(RngStream(1).uniform(8 * 8 * 3)[0].reshape(8, 8, 3).astype(np.float32))
        a = embed(provider, image)
        b = embed(EmbeddingProvider.toy(seed=0, dim=6), image)
        assert a.normalized
        assert np.linalg.norm(a.values) == pytest.approx(1.0)
        assert np.array_equal(a.values, b.values)

    def test_toy_needs_image(self, provider):
        with pytest.raises(InvalidInputError):
            embed(provider, "scene-00000")

    def test_embed_backward_matches_finite_difference(self, provider):
        pixels = RngStream(2).uniform(10 * 12 * 3)[0].reshape(10, 12, 3)
        g, _ = RngStream(3).normal(6)
        _, cache = provider.embed_pixels(pixels)
        grad = provider.embed_backward(cache, g)
        h = 1e-6
        for index in [(0, 0, 0), (4, 7, 1), (9, 11, 2)]:
            up, down = pixels.copy(), pixels.copy()
            up[index] += h
            down[index] -= h
            fd = (provider.embed_pixels(up)[0] @ g - provider.embed_pixels(down)[0] @ g) / (2 * h)
            assert grad[index] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_file_provider_lookup(self, temp_dir):
        cache = EmbeddingCache(["a", "b"], np.array([[1.0, 0.0], [0.0, 1.0]]))
        save_embedding_cache(temp_dir / "emb", cache)
        provider = EmbeddingProvider.from_file(temp_dir / "emb")
        assert provider.dim == 2
        np.testing.assert_array_equal(embed(provider, "b").values, [0.0, 1.0])
        with pytest.raises(EmbeddingLookupError):
            embed(provider, "c")

    def test_unknown_mode(self):
        with pytest.raises(InvalidInputError):
            EmbeddingProvider("clip", projection=np.eye(2))


class TestEmbeddingCache:
    """Tests for cache validation, persistence and noise injection."""

    def test_save_load(self, temp_dir):
        cache = EmbeddingCache(["x", "y", "z"], RngStream(0).normal((3, 4))[0], canonicalized=False)
        save_embedding_cache(temp_dir / "cache", cache)
        loaded = load_embedding_cache(temp_dir / "cache")
        assert loaded.ids == ["x", "y", "z"]
        assert loaded.canonicalized is False
        np.testing.assert_allclose(loaded.vectors, cache.vectors, atol=1e-6)

    def test_mixed_dims_rejected(self):
        with pytest.raises(InvalidInputError):
            EmbeddingCache.from_mapping({"a": np.zeros(3), "b": np.zeros(4)})

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InvalidInputError):
            EmbeddingCache(["a", "a"], np.zeros((2, 3)))

    def test_inject_noise(self):
        cache = EmbeddingCache(["a", "b", "c"], np.ones((3, 4)))
        noisy = inject_noise(cache, 0.5, seed=1)
        assert noisy.dim == 8
        np.testing.assert_array_equal(noisy.vectors[:, :4], cache.vectors)
        np.testing.assert_allclose(np.linalg.norm(noisy.vectors[:, 4:], axis=1), 0.5)
        assert not np.allclose(noisy.vectors[0, 4:], noisy.vectors[1, 4:])

    def test_noise_is_keyed_by_sample_id(self):
        forward = inject_noise(EmbeddingCache(["a", "b"], np.zeros((2, 2))), 1.0, seed=3, noise_dim=5)
        backward = inject_noise(EmbeddingCache(["b", "a"], np.zeros((2, 2))), 1.0, seed=3, noise_dim=5)
        np.testing.assert_array_equal(forward.vectors[0], backward.vectors[1])


class TestInversion:
    """Tests for style inversion against a fixed generator."""

    CFG = InversionConfig(max_steps=30, samples_per_ray=8, step_size=0.05)

    def _target(self, g, cam, seed=4):
        w_star = g.style(RngStream(seed).gaussian(g.cfg.latent_dim)[0])
        return w_star, ImageBuffer(g.render_style(w_star, cam, None, QuadratureSpec(8)).image.astype(np.float32))

    def test_loss_decreases(self, generator, camera8):
        _, target = self._target(generator, camera8)
        result = invert(generator, target, camera8, None, self.CFG)
        assert result.residual <= result.history[0]
        assert result.residual < result.history[0]
        assert result.steps <= self.CFG.max_steps

    def test_exact_start_converges_immediately(self, generator, camera8):
        w_star, _ = self._target(generator, camera8)
        target = ImageBuffer(generator.render_style(w_star, camera8, None, QuadratureSpec(8)).image)
        result = invert(generator, target, camera8, None, self.CFG.model_copy(update={"tol": 1e-10}), w0=w_star)
        assert result.converged
        assert result.steps == 0

    def test_gradient_modes_agree(self, generator, camera8):
        _, target = self._target(generator, camera8)
        w0 = generator.mean_style(RngStream(0))
        pixels = target.pixels.astype(np.float64)
        quad = QuadratureSpec(8)
        distance = PixelGradientDistance()
        fd_cfg = self.CFG.model_copy(update={"gradient_mode": "finite-difference"})
        fd_loss, fd_grad = _loss_and_grad(generator, w0, pixels, camera8, None, quad, distance, fd_cfg)
        rm_loss, rm_grad = _loss_and_grad(generator, w0, pixels, camera8, None, quad, distance, self.CFG)
        assert fd_loss == pytest.approx(rm_loss, rel=1e-12)
        np.testing.assert_allclose(fd_grad, rm_grad, rtol=1e-3, atol=1e-6 * np.abs(rm_grad).max())

    def test_wrong_target_size(self, generator, camera8):
        with pytest.raises(InvalidInputError):
            invert(generator, ImageBuffer.filled(4, 4, 3, 0.5), camera8, None, self.CFG)

    def test_wrong_channel_count(self, generator, camera8):
        with pytest.raises(InvalidInputError):
            invert(generator, ImageBuffer.filled(8, 8, 1, 0.5), camera8, None, self.CFG)

    def test_distance_gradient(self):
        pred, _ = RngStream(5).normal((4, 5, 3))
        target, _ = RngStream(6).normal((4, 5, 3))
        distance = PixelGradientDistance()
        _, grad = distance(pred, target)
        h = 1e-6
        up, down = pred.copy(), pred.copy()
        up[2, 3, 1] += h
        down[2, 3, 1] -= h
        fd = (distance(up, target)[0] - distance(down, target)[0]) / (2 * h)
        assert grad[2, 3, 1] == pytest.approx(fd, rel=1e-6)

    def test_identical_images_have_zero_distance(self):
        pixels = np.ones((3, 3, 3))
        value, grad = PixelGradientDistance()(pixels, pixels)
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_residual_never_rises_over_ten_steps(self, generator, camera8):
        _, target = self._target(generator, camera8)
        result = invert(generator, target, camera8, None, self.CFG)
        history = result.history
        for k in range(0, len(history) - 10, 10):
            assert history[k + 10] <= history[k]

    @pytest.mark.slow
    def test_synthetic_target_at_full_resolution(self, temp_dir):
        """32x32 target from a 64-d style, default inversion settings."""
        job = InvertJob()
        assert job.model.style_dim == 64
        assert (job.camera.width, job.camera.height) == (32, 32)
        report = run_invert(job, seed=0, out=temp_dir)
        assert report["psnr"] > 30.0


class TestCanonicalize:
    """Tests for the neutral frame and dataset canonicalization."""

    def test_neutral_frame_must_face_origin(self, small_scene):
        model = SceneSampler.from_config(small_scene).model
        cam = Camera.look_at([0.0, 0.0, -3.0], [0.5, 0.0, 0.0], 8, 8)
        with pytest.raises(InvalidInputError):
            NeutralFrame(cam, canonical_params(model))

    def test_frame_for_model(self, small_scene):
        model = SceneSampler.from_config(small_scene).model
        frame = NeutralFrame.for_model(model, 8)
        assert frame.camera.width == 8
        assert frame.surface_field() is not None

    def test_canonical_render_shape(self, generator, small_scene):
        frame = NeutralFrame.for_model(SceneSampler.from_config(small_scene).model, 8)
        w = generator.mean_style(RngStream(0))
        image = canonical_render(generator, w, frame, QuadratureSpec(8))
        assert (image.height, image.width, image.channels) == (8, 8, 3)

    def test_raw_embeddings(self, generator, records, provider, small_scene):
        frame = NeutralFrame.for_model(SceneSampler.from_config(small_scene).model, 8)
        cache, rows = canonicalize_dataset(generator, records, provider, frame, raw=True)
        assert cache.canonicalized is False
        assert cache.ids == [r.sample_id for r in records]
        assert all(row["raw"] for row in rows)

    def test_inverted_embeddings(self, generator, records, provider, small_scene):
        frame = NeutralFrame.for_model(SceneSampler.from_config(small_scene).model, 8)
        cfg = InversionConfig(max_steps=2, samples_per_ray=8)
        cache, rows = canonicalize_dataset(generator, records[:2], provider, frame, cfg)
        assert cache.canonicalized is True
        assert cache.vectors.shape == (2, 6)
        np.testing.assert_allclose(np.linalg.norm(cache.vectors, axis=1), 1.0)
        assert all("residual" in row for row in rows)

    def test_file_provider_rejected(self, generator, records, temp_dir, small_scene):
        save_embedding_cache(temp_dir / "emb", EmbeddingCache(["a"], np.ones((1, 2))))
        frame = NeutralFrame.for_model(SceneSampler.from_config(small_scene).model, 8)
        with pytest.raises(InvalidInputError):
            canonicalize_dataset(generator, records, EmbeddingProvider.from_file(temp_dir / "emb"), frame)


class TestNoiseAnalysis:
    """Tests for the main-versus-noise prompt comparison."""

    def test_flags_images_closer_to_noise(self):
        report = noise_analysis([[1.0, 0.0], [0.0, 2.0]], [[1.0, 0.0]], [[0.0, 1.0]], ids=["a", "b"])
        assert report.flagged_count == 1
        assert report.images[0].flagged is False
        assert report.images[1].flagged is True
        assert report.images[1].sample_id == "b"
        assert report.noise_prompt_mean == [pytest.approx(0.5)]

    def test_report_dict(self):
        report = noise_analysis([[1.0, 1.0]], [[1.0, 0.0]], [[0.0, 1.0]])
        data = report.to_dict()
        assert set(data) == {"images", "noise_prompt_mean", "flagged_count"}
        assert data["images"][0]["main"] == pytest.approx(data["images"][0]["noise"])

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            noise_analysis([[1.0, 0.0]], [[1.0, 0.0, 0.0]], [[0.0, 1.0]])

    def test_prompt_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            noise_analysis([[1.0, 0.0]] * 3, [[1.0, 0.0]] * 2, [[0.0, 1.0]])

    def test_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            noise_analysis([[0.0, 0.0]], [[1.0, 0.0]], [[0.0, 1.0]])
