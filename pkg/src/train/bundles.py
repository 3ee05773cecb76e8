"""
TriMorph v2026 - Generator and Discriminator Bundles
Generator: mapping net, linear style-to-plane synthesis, decoder, alignment net.
Discriminator: strided conv stem over (image || mesh coordinates), camera
mapping, alignment net; the score is a projection u . v_r.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from utils.config import get_config

from ..assets.image import ImageBuffer
from ..assets.rng import RngStream
from ..condition.alignment import AlignmentCache, AlignmentNet
from ..condition.conditioning import align_style
from ..errors import InvalidInputError
from ..field.decoder import DecoderNet
from ..field.network import DenseNet, ForwardCache, activate, activate_grad
from ..field.triplane import TriPlaneField
from ..geometry.surface_field import SurfaceField
from ..render.camera import Camera, camera_vector, make_rays
from ..render.volume import QuadratureSpec, RenderOutput, render_image, render_rays, render_rays_backward
from .config import ModelConfig

logger = logging.getLogger(__name__)

CAMERA_VECTOR_DIM = 12


@dataclass
class StylePass:
    """Cached forward pass w -> planes -> pixels for one sample."""
    w: np.ndarray
    planes: TriPlaneField
    synthesis_cache: ForwardCache
    output: RenderOutput
    height: int
    width: int

    @property
    def image(self) -> np.ndarray:
        return self.output.features.reshape(self.height, self.width, -1)


class GeneratorBundle:
    def __init__(
        self,
        cfg: ModelConfig,
        m_g: DenseNet,
        s_g: DenseNet,
        decoder: DecoderNet,
        t_g: AlignmentNet,
    ):
        plane_size = 3 * cfg.plane_resolution**2 * cfg.plane_channels
        if s_g.out_dim != plane_size or s_g.in_dim != cfg.style_dim:
            raise InvalidInputError(f"Synthesis map must be {cfg.style_dim} -> {plane_size}")
        if m_g.in_dim != cfg.latent_dim or m_g.out_dim != cfg.style_dim:
            raise InvalidInputError("Mapping net dims disagree with the model config")
        self.cfg = cfg
        self.m_g = m_g
        self.s_g = s_g
        self.decoder = decoder
        self.t_g = t_g
        half = cfg.half_extent
        self.bounds = np.array([[-half] * 3, [half] * 3])

    @classmethod
    def create(cls, cfg: ModelConfig, rng: RngStream, cond_dim: Optional[int] = None) -> "GeneratorBundle":
        m_g = DenseNet.init([cfg.latent_dim, *cfg.mapping_hidden, cfg.style_dim], rng.derive("mapping"))
        plane_size = 3 * cfg.plane_resolution**2 * cfg.plane_channels
        weight, _ = rng.derive("synthesis").normal(
            (plane_size, cfg.style_dim), cfg.synthesis_gain / np.sqrt(cfg.style_dim)
        )
        s_g = DenseNet([(weight, np.zeros(plane_size))], output_activation="linear")
        decoder = DecoderNet.create(
            cfg.plane_channels, cfg.decoder_hidden, cfg.feature_channels, rng.derive("decoder")
        )
        t_g = AlignmentNet.create(
            cfg.style_dim,
            cfg.embed_dim if cond_dim is None else cond_dim,
            rng.derive("align-g"),
            cfg.align_width,
            cfg.align_blocks,
        )
        return cls(cfg, m_g, s_g, decoder, t_g)

    def groups(self) -> dict[str, list[np.ndarray]]:
        return {
            "mapping": self.m_g.parameters(),
            "synthesis": self.s_g.parameters(),
            "decoder": self.decoder.parameters(),
            "align": self.t_g.parameters(),
        }

    def copy(self) -> "GeneratorBundle":
        return GeneratorBundle(self.cfg, self.m_g.copy(), self.s_g.copy(), self.decoder.copy(), self.t_g.copy())

    def style(self, z) -> np.ndarray:
        return self.m_g.forward(z)

    def mean_style(self, rng: RngStream, count: int = 256) -> np.ndarray:
        z, _ = rng.derive("mean-style").normal((count, self.cfg.latent_dim))
        return self.style(z).mean(axis=0)

    def planes(self, w) -> TriPlaneField:
        flat = self.s_g.forward(np.asarray(w, dtype=np.float64))
        return TriPlaneField.from_flat(flat, self.cfg.plane_resolution, self.cfg.plane_channels, self.bounds)

    def render_style(
        self,
        w,
        cam: Camera,
        sf: Optional[SurfaceField],
        quad: QuadratureSpec,
    ) -> StylePass:
        """Full-image forward pass that keeps every cache needed for backward."""
        w = np.asarray(w, dtype=np.float64)
        flat, synthesis_cache = self.s_g.forward_cached(w)
        tp = TriPlaneField.from_flat(flat, self.cfg.plane_resolution, self.cfg.plane_channels, self.bounds)
        output = render_rays(tp, self.decoder, sf, make_rays(cam), cam, quad, keep_cache=True)
        return StylePass(w, tp, synthesis_cache, output, cam.height, cam.width)

    def render_style_backward(self, sp: StylePass, grad_image) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
        """(grad w, synthesis gradients, decoder gradients) for an image adjoint."""
        grad_features = np.asarray(grad_image, dtype=np.float64).reshape(sp.output.features.shape)
        grad_planes, decoder_grads = render_rays_backward(sp.planes, self.decoder, sp.output, grad_features)
        grad_w, synthesis_grads = self.s_g.vjp(sp.synthesis_cache, grad_planes.reshape(-1))
        return grad_w, synthesis_grads, decoder_grads

    def render_image(
        self,
        w,
        cam: Camera,
        sf: Optional[SurfaceField] = None,
        quad: Optional[QuadratureSpec] = None,
        threads: int = 1,
    ) -> ImageBuffer:
        quad = quad or QuadratureSpec(get_config().SAMPLES_PER_RAY)
        features, _ = render_image(self.planes(w), self.decoder, sf, cam, quad, threads)
        return features

    def render_conditioned(self, z, r, alpha: float, cam: Camera, sf: Optional[SurfaceField]) -> ImageBuffer:
        w = self.style(z)
        return self.render_image(align_style(w, r, alpha, self.t_g).values, cam, sf)

    def to_tensors(self) -> tuple[dict[str, np.ndarray], dict]:
        tensors: dict[str, np.ndarray] = {}
        meta: dict = {"model": self.cfg.model_dump()}
        nets = (
            ("g.mapping", self.m_g),
            ("g.synthesis", self.s_g),
            ("g.decoder", self.decoder),
            ("g.align", self.t_g),
        )
        for prefix, net in nets:
            t, m = net.to_tensors(prefix)
            tensors.update(t)
            meta[prefix] = m
        return tensors, meta

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray], meta: dict) -> "GeneratorBundle":
        return cls(
            ModelConfig.model_validate(meta["model"]),
            DenseNet.from_tensors("g.mapping", tensors, meta["g.mapping"]),
            DenseNet.from_tensors("g.synthesis", tensors, meta["g.synthesis"]),
            DecoderNet.from_tensors("g.decoder", tensors, meta["g.decoder"]),
            AlignmentNet.from_tensors("g.align", tensors, meta["g.align"]),
        )


@dataclass
class StemCache:
    inputs: list[np.ndarray]  # padded input of every conv layer
    preacts: list[np.ndarray]
    flat: np.ndarray
    shapes: list[tuple[int, ...]]


class ConvStem:
    """3x3 stride-2 convolutions (padding 1, leaky ReLU) then a linear head to u."""

    def __init__(self, convs: list[tuple[np.ndarray, np.ndarray]], head: tuple[np.ndarray, np.ndarray]):
        self.convs = [(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64)) for w, b in convs]
        self.head = (np.asarray(head[0], dtype=np.float64), np.asarray(head[1], dtype=np.float64))

    @classmethod
    def create(cls, in_channels: int, widths: list[int], resolution: int, out_dim: int, rng: RngStream) -> "ConvStem":
        convs = []
        channels, size = in_channels, resolution
        for k, width in enumerate(widths):
            fan_in = channels * 9
            w, _ = rng.derive("conv", k).normal((width, channels, 3, 3), np.sqrt(2.0 / fan_in))
            convs.append((w, np.zeros(width)))
            channels, size = width, (size + 1) // 2
        flat_dim = channels * size * size
        head_w, _ = rng.derive("head").normal((out_dim, flat_dim), np.sqrt(1.0 / flat_dim))
        return cls(convs, (head_w, np.zeros(out_dim)))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in self.convs:
            out.extend([w, b])
        out.extend(self.head)
        return out

    def copy(self) -> "ConvStem":
        return ConvStem([(w.copy(), b.copy()) for w, b in self.convs], (self.head[0].copy(), self.head[1].copy()))

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, StemCache]:
        """x: (N, H, W, C) -> u: (N, out_dim)."""
        h = np.asarray(x, dtype=np.float64)
        cache = StemCache([], [], np.empty(0), [])
        for w, b in self.convs:
            cache.shapes.append(h.shape)
            padded = np.pad(h, ((0, 0), (1, 1), (1, 1), (0, 0)))
            windows = sliding_window_view(padded, (3, 3), axis=(1, 2))[:, ::2, ::2]  # (N, Ho, Wo, C, 3, 3)
            pre = np.einsum("nhwckl,ockl->nhwo", windows, w) + b
            cache.inputs.append(padded)
            cache.preacts.append(pre)
            h = activate("leaky_relu", pre)
        flat = h.reshape(len(h), -1)
        cache.flat = flat
        return flat @ self.head[0].T + self.head[1], cache

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cached(x)[0]

    def backward(self, cache: StemCache, grad_u: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """(grad w.r.t. input images, parameter gradients)."""
        grad_u = np.asarray(grad_u, dtype=np.float64)
        grads: list[np.ndarray] = [np.empty(0)] * (2 * len(self.convs) + 2)
        grads[-2] = grad_u.T @ cache.flat
        grads[-1] = grad_u.sum(axis=0)
        g = (grad_u @ self.head[0]).reshape(cache.preacts[-1].shape)
        for k in reversed(range(len(self.convs))):
            w, _ = self.convs[k]
            g_pre = g * activate_grad("leaky_relu", cache.preacts[k])
            padded = cache.inputs[k]
            windows = sliding_window_view(padded, (3, 3), axis=(1, 2))[:, ::2, ::2]
            grads[2 * k] = np.einsum("nhwo,nhwckl->ockl", g_pre, windows)
            grads[2 * k + 1] = g_pre.sum(axis=(0, 1, 2))
            g_windows = np.einsum("nhwo,ockl->nhwckl", g_pre, w)
            g_padded = np.zeros_like(padded)
            ho, wo = g_pre.shape[1], g_pre.shape[2]
            for ki in range(3):
                for kj in range(3):
                    g_padded[:, ki:ki + 2 * ho:2, kj:kj + 2 * wo:2, :] += g_windows[..., ki, kj]
            g = g_padded[:, 1:-1, 1:-1, :]
        return g, grads

    def to_tensors(self, prefix: str) -> tuple[dict[str, np.ndarray], dict]:
        tensors = {f"{prefix}.p{k}": p for k, p in enumerate(self.parameters())}
        return tensors, {"layers": len(self.convs)}

    @classmethod
    def from_tensors(cls, prefix: str, tensors: dict[str, np.ndarray], meta: dict) -> "ConvStem":
        p = [tensors[f"{prefix}.p{k}"].astype(np.float64) for k in range(2 * meta["layers"] + 2)]
        convs = [(p[2 * k], p[2 * k + 1]) for k in range(meta["layers"])]
        return cls(convs, (p[-2], p[-1]))


def discriminator_input(image: np.ndarray, rdr: np.ndarray) -> np.ndarray:
    """(H, W, 6) stack of the image and the coordinate image; background coordinates become 0."""
    rdr = np.asarray(rdr, dtype=np.float64)
    rdr = np.where(rdr == np.float32(get_config().BACKGROUND_SENTINEL), 0.0, rdr)
    return np.concatenate([np.asarray(image, dtype=np.float64), rdr], axis=-1)


@dataclass
class ScorePass:
    scores: np.ndarray
    u: np.ndarray
    v: np.ndarray
    v_r: np.ndarray
    stem_cache: StemCache
    camera_cache: ForwardCache
    align_cache: Optional[AlignmentCache]
    alpha: float


class DiscriminatorBundle:
    def __init__(self, cfg: ModelConfig, s_d: ConvStem, m_d: DenseNet, t_d: AlignmentNet):
        if m_d.out_dim != s_d.head[0].shape[0]:
            raise InvalidInputError("Stem feature and camera condition dims must match")
        self.cfg = cfg
        self.s_d = s_d
        self.m_d = m_d
        self.t_d = t_d

    @classmethod
    def create(
        cls, cfg: ModelConfig, resolution: int, rng: RngStream, cond_dim: Optional[int] = None
    ) -> "DiscriminatorBundle":
        s_d = ConvStem.create(
            cfg.feature_channels + 3, cfg.stem_widths, resolution, cfg.condition_dim, rng.derive("stem")
        )
        m_d = DenseNet.init([CAMERA_VECTOR_DIM, cfg.condition_dim, cfg.condition_dim], rng.derive("camera-map"))
        t_d = AlignmentNet.create(
            cfg.condition_dim,
            cfg.embed_dim if cond_dim is None else cond_dim,
            rng.derive("align-d"),
            cfg.align_width,
            cfg.align_blocks,
        )
        return cls(cfg, s_d, m_d, t_d)

    def groups(self) -> dict[str, list[np.ndarray]]:
        return {"stem": self.s_d.parameters(), "camera": self.m_d.parameters(), "align": self.t_d.parameters()}

    def copy(self) -> "DiscriminatorBundle":
        return DiscriminatorBundle(self.cfg, self.s_d.copy(), self.m_d.copy(), self.t_d.copy())

    def score(self, x: np.ndarray, cams: np.ndarray, r: Optional[np.ndarray], alpha: float) -> ScorePass:
        """x: (N, H, W, 6); cams: (N, 12) camera vectors; one alpha for the batch."""
        u, stem_cache = self.s_d.forward_cached(x)
        v, camera_cache = self.m_d.forward_cached(cams)
        align_cache = None
        v_r = v
        if alpha > 0.0:
            direction, align_cache = self.t_d.forward_cached(v, r)
            v_r = v + alpha * direction
        return ScorePass(np.sum(u * v_r, axis=1), u, v, v_r, stem_cache, camera_cache, align_cache, alpha)

    def backward(self, sp: ScorePass, grad_scores: np.ndarray) -> tuple[np.ndarray, dict[str, list[np.ndarray]]]:
        """(grad w.r.t. inputs x, gradients per parameter group)."""
        gs = np.asarray(grad_scores, dtype=np.float64)[:, None]
        grad_x, stem_grads = self.s_d.backward(sp.stem_cache, gs * sp.v_r)
        grad_v = gs * sp.u
        align_grads = [np.zeros_like(p) for p in self.t_d.parameters()]
        if sp.align_cache is not None:
            g_v, _, g_params = self.t_d.backward(sp.align_cache, sp.alpha * gs * sp.u)
            grad_v = grad_v + g_v
            align_grads = g_params
        _, camera_grads = self.m_d.vjp(sp.camera_cache, grad_v)
        return grad_x, {"stem": stem_grads, "camera": camera_grads, "align": align_grads}

    def input_gradient(self, x: np.ndarray, cams: np.ndarray, r: Optional[np.ndarray], alpha: float) -> np.ndarray:
        """d score_i / d x_i for every sample."""
        sp = self.score(x, cams, r, alpha)
        grad_x, _ = self.backward(sp, np.ones(len(x)))
        return grad_x

    def parameter_gradient(self, x, cams, r, alpha, grad_scores) -> dict[str, list[np.ndarray]]:
        sp = self.score(x, cams, r, alpha)
        return self.backward(sp, grad_scores)[1]

    def to_tensors(self) -> tuple[dict[str, np.ndarray], dict]:
        tensors: dict[str, np.ndarray] = {}
        meta: dict = {}
        for prefix, net in (("d.stem", self.s_d), ("d.camera", self.m_d), ("d.align", self.t_d)):
            t, m = net.to_tensors(prefix)
            tensors.update(t)
            meta[prefix] = m
        return tensors, meta

    @classmethod
    def from_tensors(cls, cfg: ModelConfig, tensors: dict[str, np.ndarray], meta: dict) -> "DiscriminatorBundle":
        return cls(
            cfg,
            ConvStem.from_tensors("d.stem", tensors, meta["d.stem"]),
            DenseNet.from_tensors("d.camera", tensors, meta["d.camera"]),
            AlignmentNet.from_tensors("d.align", tensors, meta["d.align"]),
        )


def camera_batch(cams: list[Camera]) -> np.ndarray:
    return np.stack([camera_vector(c) for c in cams])
