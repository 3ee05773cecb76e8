"""
TriMorph v2026 - Latent Inversion
Finds the style vector whose render under a given camera and geometry best
reproduces a target image.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..assets.image import ImageBuffer
from ..assets.rng import RngStream
from ..errors import InvalidInputError, NumericFailure
from ..geometry.surface_field import SurfaceField
from ..render.camera import Camera
from ..render.volume import QuadratureSpec
from ..train.optim import Adam

logger = logging.getLogger(__name__)


class InversionConfig(BaseModel):
    """Optimizer settings for latent inversion."""

    model_config = ConfigDict(extra="forbid")

    max_steps: int = Field(300, ge=1, description="Upper bound on optimizer steps")
    step_size: float = Field(0.05, gt=0.0, description="Initial Adam learning rate on w")
    final_step_ratio: float = Field(0.1, gt=0.0, le=1.0, description="lr at the last step relative to step_size")
    gradient_mode: Literal["finite-difference", "reverse-mode"] = "reverse-mode"
    fd_step: float = Field(1e-3, gt=0.0, description="Central-difference step on each w coordinate")
    tol: float = Field(1e-5, ge=0.0, description="Stop once the loss is at or below this value")
    distance: Literal["l2"] = "l2"
    samples_per_ray: int = Field(24, ge=2)
    seed: int = 0


class ImageDistance(Protocol):
    def __call__(self, pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]: ...


@dataclass(frozen=True)
class PixelGradientDistance:
    """Pixel L2 plus L2 of horizontal and vertical finite differences.

    Returns the value and its gradient w.r.t. the prediction.
    """
    pixel_weight: float = 1.0
    gradient_weight: float = 0.5

    def __call__(self, pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
        err = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
        value = self.pixel_weight * float(np.mean(err * err))
        grad = 2.0 * self.pixel_weight * err / err.size

        dx = err[:, 1:] - err[:, :-1]
        dy = err[1:, :] - err[:-1, :]
        if dx.size:
            value += self.gradient_weight * float(np.mean(dx * dx))
            g = 2.0 * self.gradient_weight * dx / dx.size
            grad[:, 1:] += g
            grad[:, :-1] -= g
        if dy.size:
            value += self.gradient_weight * float(np.mean(dy * dy))
            g = 2.0 * self.gradient_weight * dy / dy.size
            grad[1:, :] += g
            grad[:-1, :] -= g
        return value, grad


DISTANCES = {"l2": PixelGradientDistance}


@dataclass
class InversionResult:
    w: np.ndarray
    residual: float
    steps: int
    converged: bool
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "steps": self.steps,
            "converged": self.converged,
            "w_norm": float(np.linalg.norm(self.w)),
        }


def _render(g, w: np.ndarray, cam: Camera, sf: Optional[SurfaceField], quad: QuadratureSpec) -> np.ndarray:
    return g.render_style(w, cam, sf, quad).image


def _loss_and_grad(g, w, target, cam, sf, quad, distance: ImageDistance, cfg: InversionConfig):
    if cfg.gradient_mode == "reverse-mode":
        sp = g.render_style(w, cam, sf, quad)
        value, grad_image = distance(sp.image, target)
        grad_w, _, _ = g.render_style_backward(sp, grad_image)
        return value, grad_w

    value, _ = distance(_render(g, w, cam, sf, quad), target)
    grad_w = np.zeros_like(w)
    h = cfg.fd_step
    for i in range(w.size):
        step = np.zeros_like(w)
        step[i] = h
        plus, _ = distance(_render(g, w + step, cam, sf, quad), target)
        minus, _ = distance(_render(g, w - step, cam, sf, quad), target)
        grad_w[i] = (plus - minus) / (2.0 * h)
    return value, grad_w


def invert(
    g,
    target: ImageBuffer,
    cam: Camera,
    sf: Optional[SurfaceField],
    cfg: Optional[InversionConfig] = None,
    w0: Optional[np.ndarray] = None,
    distance: Optional[ImageDistance] = None,
) -> InversionResult:
    """Minimize distance(render(w), target) over w with Adam and a decaying step size.

    Starts from `w0` or the generator's mean style. The best w seen is
    returned together with its loss as the residual.
    """
    cfg = cfg or InversionConfig()
    distance = distance or DISTANCES[cfg.distance]()
    if (target.height, target.width) != (cam.height, cam.width):
        raise InvalidInputError(
            f"Target is {target.width}x{target.height} but the camera renders {cam.width}x{cam.height}"
        )
    pixels = target.pixels.astype(np.float64)
    if pixels.shape[2] != g.cfg.feature_channels:
        raise InvalidInputError(
            f"Target has {pixels.shape[2]} channels, generator renders {g.cfg.feature_channels}"
        )
    quad = QuadratureSpec(cfg.samples_per_ray)

    if w0 is None:
        w = g.mean_style(RngStream(cfg.seed)).astype(np.float64)
    else:
        w = np.array(w0, dtype=np.float64, copy=True)
    optimizer = Adam([w], lr=cfg.step_size, betas=(0.9, 0.999))

    best_w, best_loss = w.copy(), math.inf
    history: list[float] = []
    steps = 0
    for step in range(cfg.max_steps + 1):
        loss, grad_w = _loss_and_grad(g, w, pixels, cam, sf, quad, distance, cfg)
        if not math.isfinite(loss) or not np.all(np.isfinite(grad_w)):
            raise NumericFailure(
                "Inversion loss became non-finite",
                {"step": step, "loss": loss, "w_norm": float(np.linalg.norm(w))},
            )
        history.append(loss)
        if loss < best_loss:
            best_w, best_loss = w.copy(), loss
        if loss <= cfg.tol or step == cfg.max_steps:
            break
        lr = cfg.step_size * cfg.final_step_ratio ** (step / max(cfg.max_steps - 1, 1))
        optimizer.step([grad_w], lr=lr)
        steps += 1
        if step % 25 == 0:
            logger.debug(f"Inversion step {step}: loss {loss:.3e}")

    converged = best_loss <= cfg.tol
    if converged:
        logger.info(f"Inversion converged after {steps} steps, residual {best_loss:.3e}")
    else:
        logger.info(f"Inversion stopped after {steps} steps above tolerance, residual {best_loss:.3e}")
    return InversionResult(best_w, best_loss, steps, converged, history)
