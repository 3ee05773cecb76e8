"""
TriMorph v2026 - Adversarial Training Step
One alternating discriminator/generator update with alpha-dropout, R1,
density smoothing and the conditioning penalties.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..assets.rng import RngStream
from ..errors import InvalidInputError, NumericFailure
from ..field.network import add_gradients
from ..geometry.surface_field import SurfaceField
from ..regularize.jacobian import ProbeSpec
from ..render.camera import Camera
from ..render.volume import QuadratureSpec
from .bundles import DiscriminatorBundle, GeneratorBundle, StylePass, camera_batch, discriminator_input
from .config import TrainConfig
from .losses import (
    d_loss_terms,
    density_reg_with_grad,
    g_adv_terms,
    r1_parameter_gradient,
    r_jac_with_grad,
    r_norm_with_grad,
)
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass
class TrainBatch:
    """Real samples of one step; embeddings are None in the unconditional stage."""
    sample_ids: list[str]
    images: np.ndarray  # (N, H, W, C)
    rdr: np.ndarray  # (N, H, W, 3)
    cameras: list[Camera]
    surface_fields: list[Optional[SurfaceField]]
    embeddings: Optional[np.ndarray] = None  # (N, d_r)

    def __len__(self) -> int:
        return len(self.sample_ids)

    @classmethod
    def from_records(cls, records: Sequence, embeddings: Optional[np.ndarray] = None) -> "TrainBatch":
        if not records:
            raise InvalidInputError("Empty training batch")
        return cls(
            [r.sample_id for r in records],
            np.stack([r.image.pixels.astype(np.float64) for r in records]),
            np.stack([r.rdr.pixels.astype(np.float64) for r in records]),
            [r.camera for r in records],
            [r.surface_field() for r in records],
            embeddings,
        )

    def discriminator_inputs(self, images: np.ndarray) -> np.ndarray:
        return np.stack([discriminator_input(img, rdr) for img, rdr in zip(images, self.rdr)])


class GanOptimizers:
    """One Adam instance per parameter group of each bundle."""

    def __init__(self, g: GeneratorBundle, d: DiscriminatorBundle, lr: float):
        self.g = {name: Adam(params, lr) for name, params in g.groups().items()}
        self.d = {name: Adam(params, lr) for name, params in d.groups().items()}

    @staticmethod
    def _apply(optimizers: dict[str, Adam], grads: dict[str, list[np.ndarray]], lr: Optional[float]):
        for name, optimizer in optimizers.items():
            optimizer.step(grads[name], lr)

    def step_g(self, grads: dict[str, list[np.ndarray]], lr: Optional[float] = None):
        self._apply(self.g, grads, lr)

    def step_d(self, grads: dict[str, list[np.ndarray]], lr: Optional[float] = None):
        self._apply(self.d, grads, lr)


def draw_alpha(rng: RngStream, step: int, cfg: TrainConfig, conditional: bool) -> float:
    """0 with probability alpha_dropout (always 0 without embeddings), else the configured alpha."""
    if not conditional:
        return 0.0
    u, _ = rng.derive("alpha", step).uniform(1)
    return 0.0 if u[0] < cfg.reg.alpha_dropout else cfg.reg.alpha


@dataclass
class GeneratorPass:
    z: np.ndarray
    w: np.ndarray
    w_r: np.ndarray
    alpha: float
    mapping_cache: object
    align_cache: object
    passes: list[StylePass]

    @property
    def images(self) -> np.ndarray:
        return np.stack([sp.image for sp in self.passes])


def generate(
    g: GeneratorBundle,
    z: np.ndarray,
    r: Optional[np.ndarray],
    alpha: float,
    cameras: Sequence[Camera],
    surface_fields: Sequence[Optional[SurfaceField]],
    quad: QuadratureSpec,
) -> GeneratorPass:
    """Batched z -> w -> w_r -> images, keeping every cache."""
    w, mapping_cache = g.m_g.forward_cached(z)
    align_cache = None
    if alpha > 0.0:
        if r is None:
            raise InvalidInputError("Conditional generation needs embeddings")
        direction, align_cache = g.t_g.forward_cached(w, r)
        w_r = w + alpha * direction
    else:
        w_r = w.copy()
    passes = [g.render_style(w_r[i], cam, sf, quad) for i, (cam, sf) in enumerate(zip(cameras, surface_fields))]
    return GeneratorPass(z, w, w_r, alpha, mapping_cache, align_cache, passes)


def _check_finite(metrics: dict, step: int, alpha: float):
    bad = [k for k, v in metrics.items() if isinstance(v, float) and not math.isfinite(v)]
    if bad:
        raise NumericFailure(
            f"Non-finite loss at step {step}: {', '.join(bad)}",
            {"step": step, "alpha": alpha, "metrics": metrics},
        )


def _check_grads(grads: dict[str, list[np.ndarray]], step: int, alpha: float, which: str):
    for name, group in grads.items():
        if not all(np.all(np.isfinite(g)) for g in group):
            raise NumericFailure(
                f"Non-finite {which} gradient in group '{name}' at step {step}",
                {"step": step, "alpha": alpha, "group": name},
            )


def _scaled(grads: list[np.ndarray], scale: float) -> list[np.ndarray]:
    return [scale * g for g in grads]


def gan_step(
    g: GeneratorBundle,
    d: DiscriminatorBundle,
    batch: TrainBatch,
    cfg: TrainConfig,
    rng: RngStream,
    step: int,
    optimizers: GanOptimizers,
    lr: Optional[float] = None,
) -> dict:
    """One discriminator update followed by one generator update on the same fakes.

    Every random draw comes from a substream keyed by (purpose, step), so the
    alpha draw never shifts the z or probe sequences.
    """
    n = len(batch)
    conditional = batch.embeddings is not None
    alpha = draw_alpha(rng, step, cfg, conditional)
    r = batch.embeddings
    quad = QuadratureSpec(cfg.scene.samples_per_ray)
    channels = g.cfg.feature_channels

    z, _ = rng.derive("z", step).normal((n, g.cfg.latent_dim))
    fake = generate(g, z, r, alpha, batch.cameras, batch.surface_fields, quad)
    cams = camera_batch(batch.cameras)
    x_fake = batch.discriminator_inputs(fake.images)
    x_real = batch.discriminator_inputs(batch.images)

    # discriminator
    sp_fake = d.score(x_fake, cams, r, alpha)
    sp_real = d.score(x_real, cams, r, alpha)
    d_adv, g_fake, g_real = d_loss_terms(sp_fake.scores, sp_real.scores)
    _, d_grads = d.backward(sp_fake, g_fake)
    _, real_grads = d.backward(sp_real, g_real)
    d_grads = {k: add_gradients(d_grads[k], real_grads[k]) for k in d_grads}
    r1 = 0.0
    if cfg.r1_weight > 0.0:
        r1, r1_grads = r1_parameter_gradient(d, x_real, cams, r, alpha, channels)
        d_grads = {k: add_gradients(d_grads[k], _scaled(r1_grads[k], cfg.r1_weight)) for k in d_grads}
    metrics = {
        "step": step,
        "alpha": alpha,
        "d_adv": d_adv,
        "r1": r1,
        "d_loss": d_adv + cfg.r1_weight * r1,
        "score_real": float(sp_real.scores.mean()),
        "score_fake": float(sp_fake.scores.mean()),
    }
    _check_finite(metrics, step, alpha)
    _check_grads(d_grads, step, alpha, "discriminator")
    optimizers.step_d(d_grads, lr)

    # generator, scored by the updated discriminator
    sp_fake = d.score(x_fake, cams, r, alpha)
    g_adv, g_scores = g_adv_terms(sp_fake.scores)
    grad_x, _ = d.backward(sp_fake, g_scores)
    grad_images = grad_x[..., :channels]

    grad_w_r = np.zeros_like(fake.w_r)
    synthesis_grads = None
    decoder_grads = None
    density = 0.0
    for i, sp in enumerate(fake.passes):
        gw, s_grads, dec_grads = g.render_style_backward(sp, grad_images[i])
        grad_w_r[i] += gw
        synthesis_grads = add_gradients(synthesis_grads, s_grads)
        decoder_grads = add_gradients(decoder_grads, dec_grads)
        if cfg.density_reg_weight > 0.0 and cfg.density_reg_points > 0:
            value, grad_planes, dens_dec = density_reg_with_grad(
                sp.planes,
                g.decoder,
                rng.derive("density", step, i),
                cfg.density_reg_points,
                cfg.density_reg_delta,
            )
            scale = cfg.density_reg_weight / n
            density += value / n
            gw_d, s_d = g.s_g.vjp(sp.synthesis_cache, scale * grad_planes.reshape(-1))
            grad_w_r[i] += gw_d
            synthesis_grads = add_gradients(synthesis_grads, s_d)
            decoder_grads = add_gradients(decoder_grads, _scaled(dens_dec, scale))

    align_grads = [np.zeros_like(p) for p in g.t_g.parameters()]
    r_jac_value = 0.0
    r_norm_value = 0.0
    grad_w = grad_w_r.copy()
    if alpha > 0.0:
        lam_norm = cfg.reg.lambda_norm
        r_norm_value, grad_r, grad_w_plain = r_norm_with_grad(fake.w_r, fake.w)
        grad_w_r_total = grad_w_r + lam_norm * grad_r
        gw_align, _, align_grads = g.t_g.backward(fake.align_cache, alpha * grad_w_r_total)
        grad_w = grad_w_r_total + gw_align + lam_norm * grad_w_plain
        if cfg.reg.lambda_jac > 0.0:
            probes = ProbeSpec(cfg.reg.probe_sigma, cfg.reg.n_probes, rng.derive("probes", step))
            r_jac_value, gw_jac, jac_grads = r_jac_with_grad(g.t_g, fake.w, r, alpha, probes)
            grad_w = grad_w + cfg.reg.lambda_jac * gw_jac
            align_grads = add_gradients(align_grads, _scaled(jac_grads, cfg.reg.lambda_jac))
    _, mapping_grads = g.m_g.vjp(fake.mapping_cache, grad_w)

    g_loss = (
        g_adv
        + cfg.reg.lambda_jac * r_jac_value
        + cfg.reg.lambda_norm * r_norm_value
        + cfg.density_reg_weight * density
    )
    metrics.update(
        {"g_adv": g_adv, "r_jac": r_jac_value, "r_norm": r_norm_value, "density": density, "g_loss": g_loss}
    )
    g_grads = {
        "mapping": mapping_grads,
        "synthesis": synthesis_grads,
        "decoder": decoder_grads,
        "align": align_grads,
    }
    _check_finite(metrics, step, alpha)
    _check_grads(g_grads, step, alpha, "generator")
    optimizers.step_g(g_grads, lr)
    logger.debug(f"step {step} alpha={alpha:.2f} d_loss={metrics['d_loss']:.4f} g_loss={g_loss:.4f}")
    return metrics
