"""
TriMorph v2026 - Feature/Density Decoder
Small dense network mapping a tri-plane feature f' to (feature f, density sigma).
The last output is the raw density; sigma = softplus(raw) keeps it non-negative.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from ..assets.rng import RngStream
from ..errors import InvalidInputError
from .network import DenseNet, ForwardCache, softplus


@dataclass(frozen=True)
class FieldSample:
    feature: np.ndarray
    density: float

    def __post_init__(self):
        if self.density < 0:
            raise InvalidInputError("density must be non-negative")


class DecoderNet(DenseNet):
    """DenseNet whose first C_f outputs are features and whose last output is raw density."""

    def __init__(
        self,
        layers: list[tuple[np.ndarray, np.ndarray]],
        activation: str = "softplus",
        feature_channels: Optional[int] = None,
    ):
        super().__init__(layers, activation=activation, output_activation="linear")
        self.feature_channels = self.out_dim - 1 if feature_channels is None else feature_channels
        if self.feature_channels + 1 != self.out_dim:
            raise InvalidInputError(
                f"Decoder emits {self.out_dim} values, needs feature_channels + 1 = {self.feature_channels + 1}"
            )

    @classmethod
    def create(
        cls,
        in_channels: int,
        hidden: list[int],
        feature_channels: int,
        rng: RngStream,
        activation: str = "softplus",
    ) -> "DecoderNet":
        base = DenseNet.init([in_channels, *hidden, feature_channels + 1], rng, activation=activation)
        return cls(list(zip(base.weights, base.biases)), activation, feature_channels)

    def copy(self) -> "DecoderNet":
        return DecoderNet(
            [(w.copy(), b.copy()) for w, b in zip(self.weights, self.biases)],
            self.activation,
            self.feature_channels,
        )

    def decode_batch(self, fprime) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
        """(features (..., C_f), density (...), cache) for a batch of plane features."""
        out, cache = self.forward_cached(fprime)
        return out[..., : self.feature_channels], softplus(out[..., -1]), cache

    def decode_backward(self, cache: ForwardCache, grad_feature, grad_density):
        """Adjoints of decode_batch: (grad w.r.t. f', parameter gradients)."""
        raw = cache.preacts[-1][:, -1]
        grad_raw = np.asarray(grad_density, dtype=np.float64).reshape(-1) * expit(raw)
        grad_out = np.concatenate(
            [np.asarray(grad_feature, dtype=np.float64).reshape(len(raw), -1), grad_raw[:, None]], axis=1
        )
        return self.vjp(cache, grad_out)

    def to_tensors(self, prefix: str) -> tuple[dict[str, np.ndarray], dict]:
        tensors, meta = super().to_tensors(prefix)
        meta["feature_channels"] = self.feature_channels
        return tensors, meta

    @classmethod
    def from_tensors(cls, prefix: str, tensors: dict[str, np.ndarray], meta: dict) -> "DecoderNet":
        base = DenseNet.from_tensors(prefix, tensors, meta)
        return cls(list(zip(base.weights, base.biases)), meta["activation"], meta["feature_channels"])


def decode(net: DecoderNet, fprime) -> FieldSample:
    """Single-point decode."""
    fprime = np.asarray(fprime, dtype=np.float64).reshape(-1)
    if fprime.size != net.in_dim:
        raise InvalidInputError(f"Decoder expects {net.in_dim} features, got {fprime.size}")
    feature, density, _ = net.decode_batch(fprime[None, :])
    return FieldSample(feature[0], float(density[0]))
