"""
TriMorph v2026 - Volume Rendering
Alpha-compositing quadrature of feature and density along camera rays, with
each sample point deformed by an optional surface field before the field query.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from utils.config import get_config

from ..assets.image import ImageBuffer
from ..assets.rng import RngStream
from ..errors import InvalidInputError
from ..field.decoder import DecoderNet
from ..field.triplane import TriPlaneField, sample_triplane, sample_triplane_backward
from ..geometry.surface_field import SurfaceField
from .camera import Camera, RayBatch, make_rays

logger = logging.getLogger(__name__)

# query(points (N, 3)) -> (features (N, C), density (N,), opaque cache)
QueryFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, Any]]


@dataclass(frozen=True)
class QuadratureSpec:
    n_samples: int = 24
    stratified: bool = False
    jitter: RngStream = field(default_factory=lambda: RngStream(0))

    def __post_init__(self):
        if self.n_samples < 2:
            raise InvalidInputError("n_samples must be >= 2")


@dataclass
class MarchResult:
    features: np.ndarray  # (k, C)
    transmittance: np.ndarray  # (k,) after the last sample
    depth: np.ndarray  # (k,)
    weights: np.ndarray  # (k, n)


@dataclass
class MarchCache:
    features: np.ndarray  # (k, n, C) per-sample features
    weights: np.ndarray
    after: np.ndarray  # transmittance just past each sample, (k, n)
    delta: float
    query_cache: Any


def sample_depths(rays: RayBatch, cam: Camera, quad: QuadratureSpec, rng: Optional[RngStream]) -> np.ndarray:
    """(k, n) ray parameters: interval midpoints, or uniform jitter inside each interval."""
    n = quad.n_samples
    delta = (cam.t_far - cam.t_near) / n
    if quad.stratified:
        if rng is None:
            raise InvalidInputError("Stratified sampling needs a jitter stream")
        u, _ = rng.uniform(len(rays) * n)
        offsets = u.reshape(len(rays), n)
    else:
        offsets = np.full((len(rays), n), 0.5)
    return cam.t_near + (np.arange(n)[None, :] + offsets) * delta


def composite(sigma: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """weights, transmittance after each sample, final transmittance."""
    tau = sigma * delta
    cumulative = np.cumsum(tau, axis=1)
    before = np.exp(-np.concatenate([np.zeros((len(tau), 1)), cumulative[:, :-1]], axis=1))
    after = np.exp(-cumulative)
    weights = before * -np.expm1(-tau)
    return weights, after, after[:, -1]


def march(
    rays: RayBatch,
    cam: Camera,
    quad: QuadratureSpec,
    query: QueryFn,
    rng: Optional[RngStream] = None,
) -> tuple[MarchResult, MarchCache]:
    """Integrate a field along rays. Spacing is constant in the undeformed ray parameter."""
    k, n = len(rays), quad.n_samples
    t = sample_depths(rays, cam, quad, rng)
    points = rays.origins[:, None, :] + t[:, :, None] * rays.directions[:, None, :]
    features, sigma, query_cache = query(points.reshape(-1, 3))
    features = features.reshape(k, n, -1)
    sigma = sigma.reshape(k, n)
    delta = (cam.t_far - cam.t_near) / n

    weights, after, final = composite(sigma, delta)
    total = weights.sum(axis=1)
    depth = (weights * t).sum(axis=1) / np.maximum(total, get_config().DEPTH_EPSILON)
    result = MarchResult(np.einsum("kn,knc->kc", weights, features), final, depth, weights)
    return result, MarchCache(features, weights, after, delta, query_cache)


def march_backward(cache: MarchCache, grad_features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjoints of the composited features w.r.t. per-sample features and densities."""
    grad_features = np.asarray(grad_features, dtype=np.float64)
    grad_sample_features = cache.weights[:, :, None] * grad_features[:, None, :]
    g = np.einsum("kc,knc->kn", grad_features, cache.features)
    gw = g * cache.weights
    # sum over later samples i > j of g_i w_i
    later = np.cumsum(gw[:, ::-1], axis=1)[:, ::-1] - gw
    grad_tau = g * cache.after - later
    return grad_sample_features, grad_tau * cache.delta


@dataclass
class VolumeCache:
    points: np.ndarray
    decoder_cache: Any


class NeuralVolume:
    """Tri-plane + decoder queried at (optionally) deformed sample points."""

    def __init__(self, tp: TriPlaneField, net: DecoderNet, sf: Optional[SurfaceField] = None):
        if net.in_dim != tp.channels:
            raise InvalidInputError(f"Decoder expects {net.in_dim} channels, planes carry {tp.channels}")
        self.tp = tp
        self.net = net
        self.sf = sf

    def query(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, VolumeCache]:
        if self.sf is not None:
            points = self.sf.deform_points(points)
        fprime = sample_triplane(self.tp, points)
        features, density, decoder_cache = self.net.decode_batch(fprime)
        return features, density, VolumeCache(points, decoder_cache)

    def backward(self, cache: VolumeCache, grad_features, grad_density):
        """(plane gradient, decoder parameter gradients)."""
        grad_fprime, decoder_grads = self.net.decode_backward(cache.decoder_cache, grad_features, grad_density)
        return sample_triplane_backward(self.tp, cache.points, grad_fprime), decoder_grads


@dataclass
class RenderOutput:
    features: np.ndarray  # (k, C_f)
    transmittance: np.ndarray
    depth: np.ndarray
    cache: Optional[MarchCache] = None


def render_rays(
    tp: TriPlaneField,
    net: DecoderNet,
    sf: Optional[SurfaceField],
    rays: RayBatch,
    cam: Camera,
    quad: QuadratureSpec,
    rng: Optional[RngStream] = None,
    keep_cache: bool = False,
) -> RenderOutput:
    volume = NeuralVolume(tp, net, sf)
    result, cache = march(rays, cam, quad, volume.query, rng)
    return RenderOutput(result.features, result.transmittance, result.depth, cache if keep_cache else None)


def render_rays_backward(
    tp: TriPlaneField,
    net: DecoderNet,
    output: RenderOutput,
    grad_features: np.ndarray,
):
    """Plane and decoder gradients of <grad_features, output.features>."""
    if output.cache is None:
        raise InvalidInputError("Backward pass needs a render made with keep_cache=True")
    cache = output.cache
    grad_sample_features, grad_sigma = march_backward(cache, grad_features)
    channels = grad_sample_features.shape[-1]
    volume = NeuralVolume(tp, net)
    return volume.backward(cache.query_cache, grad_sample_features.reshape(-1, channels), grad_sigma.reshape(-1))


def render_ray(
    tp: TriPlaneField,
    net: DecoderNet,
    sf: Optional[SurfaceField],
    ray: tuple[np.ndarray, np.ndarray],
    cam: Camera,
    quad: QuadratureSpec,
) -> tuple[np.ndarray, float, float]:
    """(feature, final transmittance, depth) of one (origin, direction) ray."""
    origin, direction = (np.asarray(v, dtype=np.float64).reshape(1, 3) for v in ray)
    direction = direction / np.linalg.norm(direction)
    rays = RayBatch(origin, direction, np.zeros((1, 2), dtype=np.int64))
    out = render_rays(tp, net, sf, rays, cam, quad, quad.jitter if quad.stratified else None)
    return out.features[0], float(out.transmittance[0]), float(out.depth[0])


def chunk_ranges(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def render_image(
    tp: TriPlaneField,
    net: DecoderNet,
    sf: Optional[SurfaceField],
    cam: Camera,
    quad: QuadratureSpec,
    threads: int = 1,
) -> tuple[ImageBuffer, ImageBuffer]:
    """Feature and depth images. Chunks draw jitter from their own substream,
    so output bytes do not depend on the thread count."""
    rays = make_rays(cam)
    ranges = chunk_ranges(len(rays), get_config().RENDER_CHUNK_RAYS)

    def work(index: int) -> RenderOutput:
        start, stop = ranges[index]
        rng = quad.jitter.derive("chunk", index) if quad.stratified else None
        return render_rays(tp, net, sf, rays.slice(start, stop), cam, quad, rng)

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(work, range(len(ranges))))
    else:
        outputs = [work(i) for i in range(len(ranges))]

    features = np.concatenate([o.features for o in outputs]).reshape(cam.height, cam.width, -1)
    depth = np.concatenate([o.depth for o in outputs]).reshape(cam.height, cam.width, 1)
    logger.debug(f"Rendered {cam.width}x{cam.height} with {len(ranges)} chunks on {threads} thread(s)")
    return ImageBuffer(features), ImageBuffer(depth)
