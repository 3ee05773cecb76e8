"""
TriMorph v2026 - Adversarial Losses and Regularizers
Non-saturating logistic losses, R1, the density smoothness surrogate and the
gradient-carrying versions of the conditioning penalties.
"""

from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from ..assets.rng import RngStream
from ..condition.alignment import AlignmentNet
from ..field.decoder import DecoderNet
from ..field.network import softplus
from ..field.triplane import TriPlaneField
from ..regularize.jacobian import ProbeSpec
from ..render.volume import NeuralVolume


def d_loss_terms(fake_scores: np.ndarray, real_scores: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """mean softplus(D(fake)) + mean softplus(-D(real)) and its score adjoints."""
    n_fake, n_real = len(fake_scores), len(real_scores)
    loss = float(softplus(fake_scores).mean() + softplus(-real_scores).mean())
    return loss, expit(fake_scores) / n_fake, -expit(-real_scores) / n_real


def g_adv_terms(fake_scores: np.ndarray) -> tuple[float, np.ndarray]:
    """mean softplus(-D(fake)) and its score adjoint."""
    return float(softplus(-fake_scores).mean()), -expit(-fake_scores) / len(fake_scores)


def r1_penalty(grad_fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, channels: Optional[int] = None) -> np.ndarray:
    """Per-sample squared norm of dD/dx over the first `channels` input channels."""
    grad = np.asarray(grad_fn(x), dtype=np.float64)
    if channels is not None:
        grad = grad[..., :channels]
    return np.sum(grad.reshape(len(grad), -1) ** 2, axis=1)


def r1_parameter_gradient(disc, x, cams, r, alpha: float, channels: int, h: float = 1e-3):
    """Mean R1 penalty and its parameter gradients per group.

    The mixed second derivative is taken as a central difference of parameter
    gradients along the input gradient direction.
    """
    grad_x = disc.input_gradient(x, cams, r, alpha)
    direction = np.zeros_like(grad_x)
    direction[..., :channels] = grad_x[..., :channels]
    penalties = np.sum(direction.reshape(len(x), -1) ** 2, axis=1)
    scale = float(np.sqrt(penalties.mean()))
    ones = np.ones(len(x))
    if scale == 0.0:
        zero = disc.parameter_gradient(x, cams, r, alpha, ones)
        return 0.0, {k: [np.zeros_like(g) for g in v] for k, v in zero.items()}
    eps = h / scale
    plus = disc.parameter_gradient(x + eps * direction, cams, r, alpha, ones)
    minus = disc.parameter_gradient(x - eps * direction, cams, r, alpha, ones)
    factor = 2.0 / len(x) / (2.0 * eps)
    grads = {k: [factor * (gp - gm) for gp, gm in zip(plus[k], minus[k])] for k in plus}
    return float(penalties.mean()), grads


def _interior_points(tp: TriPlaneField, rng: RngStream, n_points: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = tp.bounds[0] + delta, tp.bounds[1] - delta
    u, _ = rng.derive("points").uniform(3 * n_points)
    points = lo + u.reshape(n_points, 3) * (hi - lo)
    directions, _ = rng.derive("directions").normal((n_points, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return points, points + delta * directions


def density_reg(tp: TriPlaneField, net: DecoderNet, rng: RngStream, n_points: int, delta: float) -> float:
    """mean (sigma(x) - sigma(x + delta u))^2 over points kept delta inside the bounds."""
    if n_points == 0:
        return 0.0
    volume = NeuralVolume(tp, net)
    base, moved = _interior_points(tp, rng, n_points, delta)
    _, sigma_base, _ = volume.query(base)
    _, sigma_moved, _ = volume.query(moved)
    return float(np.mean((sigma_base - sigma_moved) ** 2))


def density_reg_with_grad(tp: TriPlaneField, net: DecoderNet, rng: RngStream, n_points: int, delta: float):
    """(value, plane gradient, decoder gradients)."""
    volume = NeuralVolume(tp, net)
    if n_points == 0:
        return 0.0, np.zeros_like(tp.planes), [np.zeros_like(p) for p in net.parameters()]
    base, moved = _interior_points(tp, rng, n_points, delta)
    points = np.concatenate([base, moved])
    features, sigma, cache = volume.query(points)
    diff = sigma[:n_points] - sigma[n_points:]
    grad_sigma = np.concatenate([2.0 * diff, -2.0 * diff]) / n_points
    grad_planes, decoder_grads = volume.backward(cache, np.zeros_like(features), grad_sigma)
    return float(np.mean(diff**2)), grad_planes, decoder_grads


def r_jac_with_grad(t_g: AlignmentNet, w: np.ndarray, r: np.ndarray, alpha: float, probes: ProbeSpec):
    """Batched finite-difference penalty on w + alpha T(w, .) with gradients.

    Returns (value, grad w, parameter gradients).
    """
    batch = len(w)
    eps = probes.sigma * probes.directions(batch * r.shape[1]).reshape(probes.n_probes, batch, -1)
    eps = eps.reshape(-1, r.shape[1])
    w_rep = np.tile(w, (probes.n_probes, 1))
    r_rep = np.tile(r, (probes.n_probes, 1))
    moved, moved_cache = t_g.forward_cached(w_rep, r_rep + eps)
    base, base_cache = t_g.forward_cached(w_rep, r_rep)
    diff = moved - base
    scale = alpha * alpha / probes.sigma**2
    count = len(diff)
    value = float(scale * np.sum(diff * diff) / count)
    adjoint = 2.0 * scale * diff / count
    gw_plus, _, grads_plus = t_g.backward(moved_cache, adjoint)
    gw_base, _, grads_base = t_g.backward(base_cache, -adjoint)
    grad_w = (gw_plus + gw_base).reshape(probes.n_probes, batch, -1).sum(axis=0)
    return value, grad_w, [a + b for a, b in zip(grads_plus, grads_base)]


def r_norm_with_grad(w_r: np.ndarray, w: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """mean (||w_r|| - ||w||)^2 with gradients w.r.t. w_r and w."""
    n_r = np.linalg.norm(w_r, axis=1)
    n_w = np.linalg.norm(w, axis=1)
    gap = n_r - n_w
    batch = len(w)
    grad_r = (2.0 * gap / np.maximum(n_r, 1e-12))[:, None] * w_r / batch
    grad_w = -(2.0 * gap / np.maximum(n_w, 1e-12))[:, None] * w / batch
    return float(np.mean(gap**2)), grad_r, grad_w
