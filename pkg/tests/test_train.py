"""
Tests for bundles, losses, the GAN step, diagnostics, the training loop,
the collapse demonstration and the editing network.
"""

import json

import numpy as np
import pytest

from src.assets.rng import RngStream
from src.canonical.embedding import EmbeddingCache, EmbeddingProvider, save_embedding_cache
from src.condition.alignment import AlignmentNet
from src.errors import ConfigurationError, InvalidInputError
from src.field.triplane import TriPlaneField
from src.regularize.jacobian import ProbeSpec
from src.regularize.penalties import RegWeights
from src.render.volume import QuadratureSpec
from src.train.bundles import DiscriminatorBundle, GeneratorBundle, camera_batch, discriminator_input
from src.train.collapse import collapse_demo
from src.train.config import CollapseDemoConfig, EditorConfig, SceneConfig
from src.train.diagnostics import diversity, mean_pairwise_distance, sensitivity_ratio
from src.train.editor import create_editor, edit_objective, toy_edit_direction, train_editor
from src.train.losses import (
    d_loss_terms,
    density_reg,
    density_reg_with_grad,
    g_adv_terms,
    r1_penalty,
    r_jac_with_grad,
    r_norm_with_grad,
)
from src.train.loop import METRICS_FILE, load_bundles, save_bundles, train_loop
from src.train.optim import Adam
from src.train.steps import GanOptimizers, TrainBatch, draw_alpha, gan_step

STEP_KEYS = {
    "step", "alpha", "d_adv", "r1", "d_loss", "score_real", "score_fake",
    "g_adv", "r_jac", "r_norm", "density", "g_loss",
}


def _snapshot(bundle) -> list[np.ndarray]:
    return [p.copy() for group in bundle.groups().values() for p in group]


class TestAdam:
    def test_moves_toward_minimum(self):
        x = np.array([3.0, -2.0])
        opt = Adam([x], lr=0.1, betas=(0.9, 0.999))
        for _ in range(200):
            opt.step([2.0 * x])
        assert np.linalg.norm(x) < 0.5

    def test_zero_lr_keeps_parameters(self):
        x = np.array([1.0, 2.0])
        Adam([x], lr=0.1).step([np.ones(2)], lr=0.0)
        assert x.tolist() == [1.0, 2.0]

    def test_gradient_count(self):
        with pytest.raises(InvalidInputError):
            Adam([np.zeros(2)]).step([np.zeros(2), np.zeros(2)])

    def test_negative_lr(self):
        with pytest.raises(InvalidInputError):
            Adam([np.zeros(2)], lr=-1.0)


class TestLosses:
    """Tests for adversarial losses and regularizer gradients."""

    def test_losses_at_zero_scores(self):
        loss, g_fake, g_real = d_loss_terms(np.zeros(4), np.zeros(4))
        assert loss == pytest.approx(2.0 * np.log(2.0))
        np.testing.assert_allclose(g_fake, 0.125)
        np.testing.assert_allclose(g_real, -0.125)
        g_loss, g_scores = g_adv_terms(np.zeros(2))
        assert g_loss == pytest.approx(np.log(2.0))
        np.testing.assert_allclose(g_scores, -0.25)

    def test_score_adjoints(self):
        fake, _ = RngStream(0).normal(3)
        real, _ = RngStream(1).normal(3)
        _, g_fake, g_real = d_loss_terms(fake, real)
        h = 1e-6
        bump = np.array([h, 0.0, 0.0])
        fd_fake = (d_loss_terms(fake + bump, real)[0] - d_loss_terms(fake - bump, real)[0]) / (2 * h)
        fd_real = (d_loss_terms(fake, real + bump)[0] - d_loss_terms(fake, real - bump)[0]) / (2 * h)
        assert g_fake[0] == pytest.approx(fd_fake, rel=1e-6)
        assert g_real[0] == pytest.approx(fd_real, rel=1e-6)

    def test_r1_penalty_of_linear_critic(self):
        x = np.zeros((2, 3, 3, 6))
        penalty = r1_penalty(lambda v: np.full(v.shape, 2.0), x, channels=3)
        np.testing.assert_allclose(penalty, 4.0 * 27)

    def test_density_reg(self, generator):
        tp = generator.planes(generator.mean_style(RngStream(0)))
        rng = RngStream(1)
        value = density_reg(tp, generator.decoder, rng, 32, 0.05)
        with_grad, grad_planes, _ = density_reg_with_grad(tp, generator.decoder, rng, 32, 0.05)
        assert value >= 0.0
        assert with_grad == pytest.approx(value, rel=1e-12)
        h = 1e-6
        index = tuple(int(i) for i in np.unravel_index(np.argmax(np.abs(grad_planes)), grad_planes.shape))
        up, down = tp.planes.copy(), tp.planes.copy()
        up[index] += h
        down[index] -= h
        fd = (
            density_reg(TriPlaneField(up, tp.bounds), generator.decoder, rng, 32, 0.05)
            - density_reg(TriPlaneField(down, tp.bounds), generator.decoder, rng, 32, 0.05)
        ) / (2 * h)
        assert grad_planes[index] == pytest.approx(fd, rel=1e-4, abs=1e-10)

    def test_no_density_points(self, generator):
        tp = generator.planes(generator.mean_style(RngStream(0)))
        assert density_reg(tp, generator.decoder, RngStream(0), 0, 0.05) == 0.0

    def test_r_norm_gradient(self):
        w_r, _ = RngStream(2).normal((3, 4))
        w, _ = RngStream(3).normal((3, 4))
        _, grad_r, grad_w = r_norm_with_grad(w_r, w)
        h = 1e-6
        up, down = w_r.copy(), w_r.copy()
        up[1, 2] += h
        down[1, 2] -= h
        fd = (r_norm_with_grad(up, w)[0] - r_norm_with_grad(down, w)[0]) / (2 * h)
        assert grad_r[1, 2] == pytest.approx(fd, rel=1e-6)
        up, down = w.copy(), w.copy()
        up[0, 0] += h
        down[0, 0] -= h
        fd = (r_norm_with_grad(w_r, up)[0] - r_norm_with_grad(w_r, down)[0]) / (2 * h)
        assert grad_w[0, 0] == pytest.approx(fd, rel=1e-6)

    def test_r_jac_of_fresh_alignment_is_zero(self):
        net = AlignmentNet.create(4, 3, RngStream(0), width=8, blocks=1)
        w, _ = RngStream(1).normal((2, 4))
        r, _ = RngStream(2).normal((2, 3))
        value, grad_w, grads = r_jac_with_grad(net, w, r, 1.0, ProbeSpec(n_probes=3))
        assert value == 0.0
        assert np.all(grad_w == 0.0)

    def test_r_jac_gradient(self):
        net = AlignmentNet.create(4, 3, RngStream(0), width=8, blocks=1, output_scale=1.0)
        w, _ = RngStream(1).normal((2, 4))
        r, _ = RngStream(2).normal((2, 3))
        probes = ProbeSpec(0.1, 3, RngStream(4))
        value, grad_w, _ = r_jac_with_grad(net, w, r, 0.5, probes)
        assert value > 0.0
        h = 1e-6
        up, down = w.copy(), w.copy()
        up[1, 3] += h
        down[1, 3] -= h
        fd = (r_jac_with_grad(net, up, r, 0.5, probes)[0] - r_jac_with_grad(net, down, r, 0.5, probes)[0]) / (2 * h)
        assert grad_w[1, 3] == pytest.approx(fd, rel=1e-4, abs=1e-10)


class TestBundles:
    """Tests for the generator and discriminator bundles."""

    def test_fresh_generator_alignment_is_zero(self, generator):
        assert generator.t_g.is_zero

    def test_render_shape(self, generator, camera8):
        image = generator.render_image(generator.mean_style(RngStream(0)), camera8, quad=QuadratureSpec(8))
        assert image.pixels.shape == (8, 8, 3)

    def test_discriminator_input_masks_background(self):
        image = np.ones((2, 2, 3))
        rdr = np.full((2, 2, 3), -1e4, dtype=np.float32)
        rdr[0, 0] = [0.1, 0.2, 0.3]
        x = discriminator_input(image, rdr)
        assert x.shape == (2, 2, 6)
        assert np.all(x[1, 1, 3:] == 0.0)
        np.testing.assert_allclose(x[0, 0, 3:], [0.1, 0.2, 0.3], atol=1e-7)

    def test_discriminator_input_gradient(self, discriminator, records):
        batch = TrainBatch.from_records(records[:2])
        x = batch.discriminator_inputs(batch.images)
        cams = camera_batch(batch.cameras)
        grad = discriminator.input_gradient(x, cams, None, 0.0)
        h = 1e-6
        index = (1, 3, 4, 2)
        up, down = x.copy(), x.copy()
        up[index] += h
        down[index] -= h
        fd = (
            discriminator.score(up, cams, None, 0.0).scores.sum()
            - discriminator.score(down, cams, None, 0.0).scores.sum()
        ) / (2 * h)
        assert grad[index] == pytest.approx(fd, rel=1e-4, abs=1e-9)

    def test_checkpoint_round_trip(self, generator, discriminator, temp_dir, camera8):
        save_bundles(temp_dir / "ckpt", generator, discriminator, stage=1, step=3)
        g, d, manifest = load_bundles(temp_dir / "ckpt")
        assert manifest["step"] == 3
        w = generator.mean_style(RngStream(0))
        quad = QuadratureSpec(8)
        np.testing.assert_allclose(
            g.render_image(w, camera8, quad=quad).pixels,
            generator.render_image(w, camera8, quad=quad).pixels,
            atol=1e-4,
        )
        assert d.t_d.cond_dim == discriminator.t_d.cond_dim

    def test_not_a_checkpoint(self, temp_dir):
        save_embedding_cache(temp_dir / "emb", EmbeddingCache(["a"], np.ones((1, 2))))
        with pytest.raises(InvalidInputError):
            load_bundles(temp_dir / "emb")


class TestGanStep:
    """Tests for one adversarial update."""

    def test_alpha_draws(self, small_train):
        rng = RngStream(0)
        assert draw_alpha(rng, 0, small_train, conditional=False) == 0.0
        always = small_train.model_copy(update={"reg": RegWeights(alpha=0.7, alpha_dropout=0.0)})
        never = small_train.model_copy(update={"reg": RegWeights(alpha=0.7, alpha_dropout=1.0)})
        assert draw_alpha(rng, 3, always, conditional=True) == 0.7
        assert draw_alpha(rng, 3, never, conditional=True) == 0.0

    def test_alpha_dropout_rate(self, small_train):
        cfg = small_train.model_copy(update={"reg": RegWeights(alpha=1.0, alpha_dropout=0.5)})
        rng = RngStream(0).derive("train")
        draws = np.array([draw_alpha(rng, step, cfg, conditional=True) for step in range(100_000)])
        assert set(np.unique(draws)) == {0.0, 1.0}
        assert abs(np.mean(draws == 0.0) - 0.5) <= 0.01

    def test_unconditional_metrics(self, generator, discriminator, records, small_train):
        batch = TrainBatch.from_records(records[:2])
        optimizers = GanOptimizers(generator, discriminator, small_train.learning_rate)
        metrics = gan_step(generator, discriminator, batch, small_train, RngStream(0), 0, optimizers)
        assert set(metrics) == STEP_KEYS
        assert metrics["alpha"] == 0.0
        assert metrics["r_jac"] == 0.0
        assert all(np.isfinite(v) for v in metrics.values())

    def test_zero_learning_rate_keeps_weights(self, generator, discriminator, records, small_train):
        before_g, before_d = _snapshot(generator), _snapshot(discriminator)
        batch = TrainBatch.from_records(records[:2])
        optimizers = GanOptimizers(generator, discriminator, small_train.learning_rate)
        gan_step(generator, discriminator, batch, small_train, RngStream(0), 0, optimizers, lr=0.0)
        for a, b in zip(before_g + before_d, _snapshot(generator) + _snapshot(discriminator)):
            assert np.array_equal(a, b)

    def test_step_changes_weights(self, generator, discriminator, records, small_train):
        before = _snapshot(generator)
        batch = TrainBatch.from_records(records[:2])
        optimizers = GanOptimizers(generator, discriminator, small_train.learning_rate)
        gan_step(generator, discriminator, batch, small_train, RngStream(0), 0, optimizers)
        assert any(not np.array_equal(a, b) for a, b in zip(before, _snapshot(generator)))

    def test_conditional_step(self, generator, discriminator, records, small_train):
        cfg = small_train.model_copy(update={"reg": RegWeights(alpha=1.0, alpha_dropout=0.0, lambda_jac=0.1)})
        r, _ = RngStream(5).normal((2, small_train.model.embed_dim))
        batch = TrainBatch.from_records(records[:2], r)
        optimizers = GanOptimizers(generator, discriminator, cfg.learning_rate)
        metrics = gan_step(generator, discriminator, batch, cfg, RngStream(0), 0, optimizers)
        assert metrics["alpha"] == 1.0
        assert metrics["r_jac"] == 0.0  # fresh alignment head is zero before this update
        assert not generator.t_g.is_zero

    def test_empty_batch(self):
        with pytest.raises(InvalidInputError):
            TrainBatch.from_records([])


class TestDiagnostics:
    """Tests for diversity and the sensitivity ratio."""

    def test_mean_pairwise_distance(self):
        images = np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]])
        assert mean_pairwise_distance(images) == pytest.approx(10.0 / 3.0)

    def test_diversity_needs_two_samples(self, generator, camera8):
        with pytest.raises(InvalidInputError):
            diversity(generator, None, 1, camera8)

    def test_diversity_positive(self, generator, camera8):
        value = diversity(generator, None, 3, camera8, quad=QuadratureSpec(8))
        assert value > 0.0

    def test_ratio_infinite_when_latent_ignored(self):
        ratio = sensitivity_ratio(lambda z, r: 2.0 * r, np.ones(3), np.ones(3), ProbeSpec(n_probes=4))
        assert ratio == float("inf")

    def test_ratio_of_linear_generator(self):
        ratio = sensitivity_ratio(
            lambda z, r: np.concatenate([z, 3.0 * r]), np.zeros(4), np.zeros(4), ProbeSpec(n_probes=4000)
        )
        assert ratio == pytest.approx(9.0, rel=0.1)

    def test_ratio_of_concatenation_is_one(self):
        """Output (z, r) reacts equally to both inputs."""
        ratio = sensitivity_ratio(
            lambda z, r: np.concatenate([z, r]), np.zeros(8), np.zeros(8), ProbeSpec(n_probes=10_000)
        )
        assert ratio == pytest.approx(1.0, rel=0.05)


class TestTrainLoop:
    """Tests for the staged training driver."""

    def test_writes_metrics_and_checkpoint(self, small_train, records, temp_dir):
        result = train_loop(small_train, temp_dir, records)
        lines = (temp_dir / METRICS_FILE).read_text().splitlines()
        assert len(lines) == 1 + small_train.steps
        assert "diversity" in json.loads(lines[0])
        assert len(result.metrics) == small_train.steps
        _, _, manifest = load_bundles(result.checkpoint)
        assert manifest["step"] == small_train.steps
        assert manifest["stage"] == 1

    def test_runs_are_deterministic(self, small_train, records, temp_dir):
        first = train_loop(small_train, temp_dir / "a", records)
        second = train_loop(small_train, temp_dir / "b", records)
        assert first.metrics == second.metrics

    def test_periodic_checkpoints_and_resume(self, small_train, records, temp_dir):
        cfg = small_train.model_copy(update={"checkpoint_every": 2})
        train_loop(cfg, temp_dir / "run", records)
        assert (temp_dir / "run" / "checkpoints" / "step_000002").is_dir()
        resumed = train_loop(cfg, temp_dir / "resumed", records, resume=temp_dir / "run" / "checkpoints" / "step_000002")
        assert [m["step"] for m in resumed.metrics] == [2, 3]

    def test_stage_two_needs_checkpoint(self, small_train, records, temp_dir):
        cfg = small_train.model_copy(update={"stage": 2})
        with pytest.raises(ConfigurationError):
            train_loop(cfg, temp_dir, records)

    def test_stage_two(self, small_train, records, temp_dir):
        stage1 = train_loop(small_train.model_copy(update={"steps": 1}), temp_dir / "s1", records)
        vectors = {rec.sample_id: RngStream(k).gaussian(5)[0] for k, rec in enumerate(records)}
        save_embedding_cache(temp_dir / "emb", EmbeddingCache.from_mapping(vectors))
        cfg = small_train.model_copy(
            update={
                "stage": 2,
                "steps": 2,
                "stage1_checkpoint": str(stage1.checkpoint),
                "embedding_cache": str(temp_dir / "emb"),
                "reg": RegWeights(alpha_dropout=0.0),
            }
        )
        result = train_loop(cfg, temp_dir / "s2", records)
        assert result.g.t_g.cond_dim == 5
        assert result.d.t_d.cond_dim == 5
        assert all(m["alpha"] == 1.0 for m in result.metrics)


class TestCollapseDemo:
    """Tests for the paired collapse runs."""

    @pytest.fixture
    def demo_cfg(self, small_model):
        return CollapseDemoConfig(
            steps=0,
            stage1_steps=0,
            noise_dim=4,
            diversity_every=1,
            diversity_samples=2,
            grid_samples=2,
            model=small_model,
            scene=SceneConfig(resolution=8, dataset_size=4, subdivisions=1, samples_per_ray=8, morph_scale=0.0),
        )

    def test_untrained_arms_match(self, demo_cfg, temp_dir):
        report = collapse_demo(demo_cfg, temp_dir)
        assert report["ratio"] == 1.0
        assert report["steps_completed"] == 0
        assert report["partial"] is False
        assert "collapse_grid.ppm" in report["grids"]

    def test_deterministic(self, demo_cfg):
        cfg = demo_cfg.model_copy(update={"steps": 2})
        first = collapse_demo(cfg)
        second = collapse_demo(cfg)
        assert first == second
        assert first["steps_completed"] == 2
        assert [point[0] for point in first["curves"]["0.0"]] == [0, 1, 2]

    def test_budget_marks_partial(self, demo_cfg):
        cfg = demo_cfg.model_copy(update={"steps": 5, "budget_seconds": 1e-9})
        report = collapse_demo(cfg)
        assert report["partial"] is True
        assert report["steps_completed"] == 0

    @pytest.mark.slow
    def test_default_config_restores_diversity(self):
        """The penalized arm keeps at least twice the diversity within the time budget."""
        report = collapse_demo(CollapseDemoConfig())
        assert report["partial"] is False
        assert report["steps_completed"] == 2000
        assert report["ratio"] >= 2.0


class TestEditor:
    """Tests for the editing network."""

    @pytest.fixture
    def provider(self, small_model):
        return EmbeddingProvider.toy(seed=0, dim=small_model.embed_dim)

    def test_editor_starts_nonzero(self, generator):
        assert not create_editor(generator, RngStream(0)).is_zero

    def test_toy_direction(self, generator, provider, camera8):
        delta = toy_edit_direction(generator, provider, camera8)
        assert delta.shape == (6,)
        assert np.linalg.norm(delta) > 0.0

    def test_training_updates_editor(self, generator, provider, camera8):
        delta = toy_edit_direction(generator, provider, camera8)
        e_t = create_editor(generator, RngStream(1))
        before = [p.copy() for p in e_t.parameters()]
        result = train_editor(generator, provider, delta, EditorConfig(steps=2, batch_size=2), camera8, e_t=e_t)
        assert 1 <= len(result.history) <= 2
        assert any(not np.array_equal(a, b) for a, b in zip(before, result.e_t.parameters()))

    def test_direction_dimension(self, generator, provider, camera8):
        with pytest.raises(InvalidInputError):
            train_editor(generator, provider, np.ones(3), EditorConfig(steps=1), camera8)

    def test_objective_undefined_at_zero_alpha(self, generator, provider, camera8):
        e_t = create_editor(generator, RngStream(0))
        with pytest.raises(InvalidInputError):
            edit_objective(generator, e_t, provider, np.zeros((1, 8)), np.ones(6), 0.0, camera8)
