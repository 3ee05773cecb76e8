"""
TriMorph v2026 - Editing Network Training
Trains an unconditioned alignment net E_t so that w + E_t(w) moves the image
embedding along a target direction, with the generator frozen.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..assets.rng import RngStream
from ..canonical.embedding import EmbeddingProvider
from ..condition.alignment import AlignmentNet
from ..errors import DegenerateInputError, InvalidInputError, NumericFailure
from ..geometry.surface_field import SurfaceField
from ..render.camera import Camera
from ..render.volume import QuadratureSpec
from .bundles import GeneratorBundle
from .config import EditorConfig
from .losses import r_norm_with_grad
from .optim import Adam

logger = logging.getLogger(__name__)

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False

EDITOR_OUTPUT_SCALE = 0.01


@dataclass
class EditorResult:
    e_t: AlignmentNet
    history: list[float] = field(default_factory=list)
    skipped: int = 0


def create_editor(g: GeneratorBundle, rng: RngStream) -> AlignmentNet:
    """E_t with a small random output layer; a zero output would leave the embedding delta undefined."""
    cfg = g.cfg
    return AlignmentNet.create(cfg.style_dim, 0, rng, cfg.align_width, cfg.align_blocks, EDITOR_OUTPUT_SCALE)


def toy_edit_direction(
    g: GeneratorBundle,
    provider: EmbeddingProvider,
    cam: Camera,
    channel: int = 0,
    gain: float = 1.5,
    rng: Optional[RngStream] = None,
) -> np.ndarray:
    """Embedding delta between the mean-style render and the same render with one channel boosted."""
    w = g.mean_style(rng or RngStream(0))
    image = g.render_style(w, cam, None, QuadratureSpec()).image
    boosted = image.copy()
    boosted[..., channel] *= gain
    before, _ = provider.embed_pixels(image)
    after, _ = provider.embed_pixels(boosted)
    return after - before


def _edit_terms(g, e_t, provider, w, delta_t, eta, cam, sf, quad, alpha: float = 1.0):
    """(loss, parameter gradients) for one style vector."""
    base, _ = provider.embed_pixels(g.render_style(w, cam, sf, quad).image)
    direction, cache = e_t.forward_cached(w[None, :])
    w_t = w + alpha * direction[0]
    sp = g.render_style(w_t, cam, sf, quad)
    edited, embed_cache = provider.embed_pixels(sp.image)
    dx = edited - base
    nx, nt = np.linalg.norm(dx), np.linalg.norm(delta_t)
    if nx == 0.0 or nt == 0.0:
        raise DegenerateInputError("Edit produced no change in the embedding")
    cos = float(dx @ delta_t / (nx * nt))
    norm_value, grad_norm, _ = r_norm_with_grad(w_t[None, :], w[None, :])
    loss = 1.0 - cos + eta * norm_value

    grad_dx = -(delta_t / (nx * nt) - cos * dx / (nx * nx))
    grad_pixels = provider.embed_backward(embed_cache, grad_dx)
    grad_w_t, _, _ = g.render_style_backward(sp, grad_pixels)
    grad_w_t = grad_w_t + eta * grad_norm[0]
    _, _, grads = e_t.backward(cache, alpha * grad_w_t[None, :])
    return loss, grads


def edit_objective(
    g: GeneratorBundle,
    e_t: AlignmentNet,
    provider: EmbeddingProvider,
    w: np.ndarray,
    delta_t: np.ndarray,
    alpha: float,
    cam: Camera,
    sf: Optional[SurfaceField] = None,
    eta: float = 0.0,
) -> float:
    """Mean edit loss over the rows of w at strength alpha (alpha > 0)."""
    if alpha <= 0.0:
        raise InvalidInputError("The embedding delta is undefined at alpha = 0")
    quad = QuadratureSpec()
    delta_t = np.asarray(delta_t, dtype=np.float64)
    return float(np.mean([_edit_terms(g, e_t, provider, wi, delta_t, eta, cam, sf, quad, alpha)[0] for wi in w]))


def train_editor(
    g: GeneratorBundle,
    provider: EmbeddingProvider,
    delta_t,
    cfg: EditorConfig,
    cam: Camera,
    sf: Optional[SurfaceField] = None,
    e_t: Optional[AlignmentNet] = None,
    show_progress: bool = False,
) -> EditorResult:
    """Adam on E_t only; samples whose edit leaves the embedding unchanged are skipped."""
    rng = RngStream(cfg.seed).derive("editor")
    e_t = e_t or create_editor(g, rng.derive("init"))
    delta_t = np.asarray(delta_t, dtype=np.float64).reshape(-1)
    if delta_t.size != provider.dim:
        raise InvalidInputError(f"Edit direction is {delta_t.size}-d, embeddings are {provider.dim}-d")
    optimizer = Adam(e_t.parameters(), cfg.learning_rate, betas=(0.9, 0.999))
    quad = QuadratureSpec()
    result = EditorResult(e_t)

    steps = range(cfg.steps)
    if TQDM_AVAILABLE and show_progress:
        steps = tqdm(steps, desc="Editor", unit="step")
    for step in steps:
        z, _ = rng.derive("z", step).normal((cfg.batch_size, g.cfg.latent_dim))
        w = g.m_g.forward(z)
        total, acc, used = 0.0, None, 0
        for wi in w:
            try:
                loss, grads = _edit_terms(g, e_t, provider, wi, delta_t, cfg.eta, cam, sf, quad)
            except DegenerateInputError:
                result.skipped += 1
                continue
            total += loss
            used += 1
            acc = grads if acc is None else [a + b for a, b in zip(acc, grads)]
        if used == 0:
            continue
        mean_loss = total / used
        if not np.isfinite(mean_loss):
            raise NumericFailure(f"Editor loss became non-finite at step {step}", {"step": step})
        optimizer.step([a / used for a in acc])
        result.history.append(mean_loss)
        logger.debug(f"editor step {step}: loss {mean_loss:.4f}")

    if result.history:
        logger.info(f"Editor trained for {cfg.steps} steps, final loss {result.history[-1]:.4f}")
    return result
