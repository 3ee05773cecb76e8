"""
TriMorph v2026 - Dense Networks
Plain dense layers with forward-mode tangent propagation (J v) and
reverse accumulation (parameter and input adjoints). No normalization layers.
"""

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
from scipy.special import expit

from ..assets.rng import RngStream
from ..errors import InvalidInputError

LEAKY_SLOPE = 0.2
ACTIVATIONS = ("linear", "relu", "leaky_relu", "softplus", "tanh")


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def activate(name: str, x: np.ndarray) -> np.ndarray:
    if name == "linear":
        return x
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "leaky_relu":
        return np.where(x > 0, x, LEAKY_SLOPE * x)
    if name == "softplus":
        return softplus(x)
    if name == "tanh":
        return np.tanh(x)
    raise InvalidInputError(f"Unknown activation {name!r}")


def activate_grad(name: str, x: np.ndarray) -> np.ndarray:
    """Derivative of the activation evaluated at the pre-activation x."""
    if name == "linear":
        return np.ones_like(x)
    if name == "relu":
        return (x > 0).astype(x.dtype)
    if name == "leaky_relu":
        return np.where(x > 0, 1.0, LEAKY_SLOPE)
    if name == "softplus":
        return expit(x)
    if name == "tanh":
        return 1.0 - np.tanh(x) ** 2
    raise InvalidInputError(f"Unknown activation {name!r}")


class SupportsJvp(Protocol):
    in_dim: int

    def jvp(self, x: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass
class ForwardCache:
    """Per-layer (input, pre-activation) pairs of one batched forward pass."""
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    batch_shape: tuple[int, ...]


class DenseNet:
    """Stack of (weight, bias) layers; hidden activation on all but the last layer."""

    def __init__(
        self,
        layers: list[tuple[np.ndarray, np.ndarray]],
        activation: str = "leaky_relu",
        output_activation: str = "linear",
    ):
        if not layers:
            raise InvalidInputError("A network needs at least one layer")
        for name in (activation, output_activation):
            if name not in ACTIVATIONS:
                raise InvalidInputError(f"Unknown activation {name!r}")
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for k, (w, b) in enumerate(layers):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if w.ndim != 2 or b.size != w.shape[0]:
                raise InvalidInputError(f"Layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if self.weights and w.shape[1] != self.weights[-1].shape[0]:
                raise InvalidInputError(
                    f"Layer {k} expects {w.shape[1]} inputs, previous layer emits {self.weights[-1].shape[0]}"
                )
            self.weights.append(w)
            self.biases.append(b)
        self.activation = activation
        self.output_activation = output_activation

    @classmethod
    def init(
        cls,
        sizes: list[int],
        rng: RngStream,
        activation: str = "leaky_relu",
        output_activation: str = "linear",
        output_gain: float = 1.0,
    ) -> "DenseNet":
        """He-style normal weights, zero biases; deterministic per stream."""
        layers = []
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            w, _ = rng.derive("layer", k).normal((fan_out, fan_in), np.sqrt(2.0 / fan_in))
            if k == len(sizes) - 2:
                w = w * output_gain / np.sqrt(2.0)
            layers.append((w, np.zeros(fan_out)))
        return cls(layers, activation, output_activation)

    @classmethod
    def identity(cls, dim: int) -> "DenseNet":
        return cls([(np.eye(dim), np.zeros(dim))], output_activation="linear")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.in_dim] + [w.shape[0] for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        """Live parameter arrays, interleaved [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(
            [(w.copy(), b.copy()) for w, b in zip(self.weights, self.biases)],
            self.activation,
            self.output_activation,
        )

    def _layer_activation(self, k: int) -> str:
        return self.output_activation if k == len(self.weights) - 1 else self.activation

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise InvalidInputError(f"Network expects {self.in_dim} inputs, got {x.shape[-1]}")
        return x

    def forward_cached(self, x) -> tuple[np.ndarray, ForwardCache]:
        x = self._check_input(x)
        batch_shape = x.shape[:-1]
        h = x.reshape(-1, self.in_dim)
        cache = ForwardCache([], [], batch_shape)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w.T + b
            cache.inputs.append(h)
            cache.preacts.append(pre)
            h = activate(self._layer_activation(k), pre)
        return h.reshape(batch_shape + (self.out_dim,)), cache

    def forward(self, x) -> np.ndarray:
        return self.forward_cached(x)[0]

    __call__ = forward

    def jvp(self, x, v) -> tuple[np.ndarray, np.ndarray]:
        """Primal output and exact J v by tangent propagation.

        v may carry extra leading probe dimensions when x is a single vector.
        """
        x = self._check_input(x)
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.in_dim:
            raise InvalidInputError(f"Tangent has {v.shape[-1]} entries, expected {self.in_dim}")
        h, t = x, v
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w.T + b
            tpre = t @ w.T
            name = self._layer_activation(k)
            h = activate(name, pre)
            t = activate_grad(name, pre) * tpre
        return h, t

    def vjp(self, cache: ForwardCache, adjoint) -> tuple[np.ndarray, list[np.ndarray]]:
        """Input adjoint and parameter gradients (summed over the batch)."""
        g = np.asarray(adjoint, dtype=np.float64).reshape(-1, self.out_dim)
        if g.shape[0] != cache.inputs[0].shape[0]:
            raise InvalidInputError("Adjoint batch does not match the cached forward pass")
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for k in reversed(range(len(self.weights))):
            g_pre = g * activate_grad(self._layer_activation(k), cache.preacts[k])
            grads[2 * k] = g_pre.T @ cache.inputs[k]
            grads[2 * k + 1] = g_pre.sum(axis=0)
            g = g_pre @ self.weights[k]
        return g.reshape(cache.batch_shape + (self.in_dim,)), grads

    def to_tensors(self, prefix: str) -> tuple[dict[str, np.ndarray], dict]:
        tensors = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            tensors[f"{prefix}.w{k}"] = w
            tensors[f"{prefix}.b{k}"] = b
        meta = {
            "sizes": self.sizes,
            "activation": self.activation,
            "output_activation": self.output_activation,
        }
        return tensors, meta

    @classmethod
    def from_tensors(cls, prefix: str, tensors: dict[str, np.ndarray], meta: dict) -> "DenseNet":
        count = len(meta["sizes"]) - 1
        layers = [
            (tensors[f"{prefix}.w{k}"].astype(np.float64), tensors[f"{prefix}.b{k}"].astype(np.float64))
            for k in range(count)
        ]
        return cls(layers, meta["activation"], meta["output_activation"])


def jvp(net: SupportsJvp, x, v) -> np.ndarray:
    """Forward-mode directional derivative J v of any network exposing jvp."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != x.shape[-1]:
        raise InvalidInputError(f"Direction has {v.shape[-1]} entries, input has {x.shape[-1]}")
    return net.jvp(x, v)[1]


def param_grad(net: DenseNet, x, adjoint) -> list[np.ndarray]:
    """Gradients of <adjoint, net(x)> w.r.t. every weight and bias."""
    adjoint = np.asarray(adjoint, dtype=np.float64)
    if adjoint.shape[-1] != net.out_dim:
        raise InvalidInputError(f"Adjoint has {adjoint.shape[-1]} entries, output has {net.out_dim}")
    _, cache = net.forward_cached(x)
    return net.vjp(cache, adjoint)[1]


def jacobian_from_jvp(fn, in_dim: int) -> np.ndarray:
    """Dense Jacobian assembled column by column from J e_i."""
    columns = [np.asarray(fn(e), dtype=np.float64).reshape(-1) for e in np.eye(in_dim)]
    return np.stack(columns, axis=1)


def finite_difference_jacobian(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian oracle."""
    x = np.asarray(x, dtype=np.float64)
    columns = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        columns.append((np.asarray(f(x + e)) - np.asarray(f(x - e))).reshape(-1) / (2.0 * h))
    return np.stack(columns, axis=1)


def add_gradients(acc: Optional[list[np.ndarray]], grads: list[np.ndarray]) -> list[np.ndarray]:
    if acc is None:
        return [g.copy() for g in grads]
    return [a + g for a, g in zip(acc, grads)]
