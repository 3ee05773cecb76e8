"""
TriMorph v2026 - Collapse Diagnostics
Sample diversity over z, the embedding-versus-latent sensitivity ratio and
the optional generator style-Jacobian monitor.
"""

import logging
import math
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from ..assets.rng import RngStream
from ..errors import InvalidInputError
from ..field.network import finite_difference_jacobian
from ..geometry.surface_field import SurfaceField
from ..regularize.jacobian import ProbeSpec, fd_frob_sq, spectral_norm
from ..render.camera import Camera
from ..render.volume import QuadratureSpec

logger = logging.getLogger(__name__)


def mean_pairwise_distance(images: np.ndarray) -> float:
    """Mean L2 distance over all unordered pairs of images."""
    flat = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    if len(flat) < 2:
        raise InvalidInputError("Need at least two images to measure diversity")
    return float(np.mean([np.linalg.norm(flat[i] - flat[j]) for i, j in combinations(range(len(flat)), 2)]))


def _styles(g, z: np.ndarray, r: Optional[np.ndarray], alpha: float) -> np.ndarray:
    w = g.m_g.forward(z)
    if alpha == 0.0:
        return w
    return w + alpha * g.t_g.forward(w, np.broadcast_to(r, (len(w), r.shape[-1])))


def diversity(
    g,
    r: Optional[np.ndarray],
    n_z: int,
    cam: Camera,
    sf: Optional[SurfaceField] = None,
    rng: Optional[RngStream] = None,
    alpha: float = 1.0,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """Mean pairwise image distance over n_z latents with (r, alpha, camera, geometry) fixed.

    r = None renders the unconditional path.
    """
    if n_z < 2:
        raise InvalidInputError("Diversity needs n_z >= 2")
    rng = rng or RngStream(0)
    quad = quad or QuadratureSpec()
    z, _ = rng.derive("diversity-z").normal((n_z, g.cfg.latent_dim))
    if r is None:
        alpha = 0.0
    else:
        r = np.asarray(r, dtype=np.float64).reshape(-1)
    w = _styles(g, z, r, alpha)
    images = np.stack([g.render_style(wi, cam, sf, quad).image for wi in w])
    return mean_pairwise_distance(images)


def sensitivity_ratio(
    generate: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z,
    r,
    probes: ProbeSpec,
) -> float:
    """||dG/dr||_F^2 / ||dG/dz||_F^2 by finite differences; +inf when G ignores z."""
    z = np.asarray(z, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    wrt_r = ProbeSpec(probes.sigma, probes.n_probes, probes.rng.derive("embedding"))
    wrt_z = ProbeSpec(probes.sigma, probes.n_probes, probes.rng.derive("latent"))
    numerator = fd_frob_sq(lambda rr: generate(z, rr), r, wrt_r)
    denominator = fd_frob_sq(lambda zz: generate(zz, r), z, wrt_z)
    if denominator == 0.0:
        logger.warning("Generator output does not depend on z; sensitivity ratio is infinite")
        return math.inf
    return numerator / denominator


def generator_image_fn(
    g,
    cam: Camera,
    sf: Optional[SurfaceField] = None,
    alpha: float = 1.0,
    quad: Optional[QuadratureSpec] = None,
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """(z, r) -> flattened image of a generator bundle, for sensitivity_ratio."""
    quad = quad or QuadratureSpec()

    def fn(z: np.ndarray, r: np.ndarray) -> np.ndarray:
        w = _styles(g, np.asarray(z)[None, :], np.asarray(r), alpha)[0]
        return g.render_style(w, cam, sf, quad).image.reshape(-1)

    return fn


def generator_style_norm(
    g,
    w,
    cam: Camera,
    sf: Optional[SurfaceField] = None,
    h: float = 1e-3,
    iters: int = 100,
) -> float:
    """Spectral norm of d image / d w from a central-difference Jacobian."""
    quad = QuadratureSpec()
    jacobian = finite_difference_jacobian(
        lambda ww: g.render_style(ww, cam, sf, quad).image.reshape(-1), np.asarray(w, dtype=np.float64), h
    )
    return spectral_norm(jacobian, iters)
